//! Load the bundled mini corpus, check out a working copy and print its schema.
//!
//! cargo run --example corpus_checkout -- concert_singer

use std::path::PathBuf;

use practiq::bench::{render_schema_markdown, sample_values};
use practiq::corpus::{introspect, load_catalog, load_examples, DbStore};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let corpus = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/minicorpus");
    let db_id = std::env::args().nth(1).unwrap_or_else(|| "concert_singer".into());

    let catalog = load_catalog(&corpus.join("tables.json"))?;
    let examples = load_examples(&corpus.join("dev.json"))?;
    println!("{} schemas, {} examples, {} skipped", catalog.len(), examples.examples.len(), examples.skipped.len());

    let work = tempfile::tempdir()?;
    let db = DbStore::new(corpus.join("database")).checkout(&db_id, work.path())?;
    let schema = introspect(&db)?;
    println!("{db_id}: {} tables, {} foreign-key components", schema.tables.len(), schema.fk_components());
    print!("{}", render_schema_markdown(&schema, &sample_values(&db, &schema, 3)?));
    Ok(())
}
