//! Fuzzy-match question n-grams against the cell values of a database.

use std::path::PathBuf;

use practiq::corpus::{introspect, DbStore};
use practiq::valuelink::{retrieve_values, similarity, LinkConfig, ValueIndex};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let corpus = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/minicorpus");
    let work = tempfile::tempdir()?;
    let db = DbStore::new(corpus.join("database")).checkout("world_1", work.path())?;
    let schema = introspect(&db)?;
    let config = LinkConfig::default();
    let index = ValueIndex::build(&db, &schema, config.per_column_cap)?;
    println!("{} values indexed", index.len());

    for q in ["Which countries are in the carribean?", "What languages are spoken in Aruba?"] {
        println!("{q}");
        for (col, values) in retrieve_values(q, &index, &config) {
            println!("  {col}: {values:?}");
        }
    }
    println!("similarity(carribean, Caribbean) = {:.3}", similarity("carribean", "Caribbean"));
    Ok(())
}
