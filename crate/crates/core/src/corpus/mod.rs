//! Spider-format inputs, working database copies, schema deltas and the
//! conversation JSONL store.

mod catalog;
mod delta;
mod examples;
mod jsonl;
mod schema;
mod store;
mod value;

pub use catalog::{catalog_entry, load_catalog, write_catalog};
pub use delta::{apply_delta, column_values, DbDelta, NewTable};
pub use examples::{load_examples, parse_examples, CorpusExample, ExampleSet, SkippedExample};
pub use jsonl::{read_conversations, write_conversations, FORMAT_VERSION};
pub use schema::{ColType, ColumnDef, ColumnRef, ForeignKey, SchemaDef, SchemaError, TableDef};
pub use store::{checkout_database, introspect, DatabaseHandle, DbStore};
pub use value::Cell;

pub(crate) use store::quote;

use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed input: {0}")]
    Parse(String),
    #[error("catalog entry `{db_id}`: {message}")]
    Resolution { db_id: String, message: String },
    #[error("no database `{0}` in the database directory")]
    MissingDatabase(String),
    #[error("delta conflict: {0}")]
    DeltaConflict(String),
    #[error("unsupported conversation record: {0}")]
    SchemaVersionMismatch(String),
    #[error("database error: {0}")]
    Sqlite(#[from] rusqlite::Error),
}

impl CorpusError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CorpusError::Io {
            path: path.into(),
            source,
        }
    }
}
