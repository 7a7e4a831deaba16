//! Compare predicted and gold SQL by their result multisets, and sort wrong
//! predictions on a mutated database into failure kinds.

use std::path::PathBuf;

use practiq::bench::{classify_failure, execution_accuracy};
use practiq::corpus::{introspect, load_examples, DbStore};
use practiq::mutator::{mutate, CategoryLabel, MutationInput};
use practiq::provider::MockProvider;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let corpus = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/minicorpus");
    let store = DbStore::new(corpus.join("database"));
    let work = tempfile::tempdir()?;
    let db = store.checkout("concert_singer", work.path())?;

    let gold = "SELECT name FROM singer WHERE age > 40";
    for pred in [gold, "SELECT name FROM singer WHERE age > 40 ORDER BY name DESC", "SELECT name FROM singer WHERE age > 30", "SELECT nme FROM singer"] {
        println!("{:<5} {pred}", execution_accuracy(pred, gold, &db));
    }

    let all = load_examples(&corpus.join("dev.json"))?.examples;
    let example = all.iter().find(|e| e.example_id == "ex00001").expect("stadium example");
    let db = store.checkout(&example.db_id, work.path())?;
    let schema = introspect(&db)?;
    let input = MutationInput { example, schema: &schema, db: &db, seed: 7 };
    let record = mutate(CategoryLabel::AmbiguousSelectColumn, input, &MockProvider::new(7), &all)?;
    let mutated = introspect(&db)?;
    for pred in [
        record.seed_sql.as_str(),
        record.clarified_sql_candidates[0].sql.as_str(),
        "SELECT count(*) FROM singer",
    ] {
        println!("{:?}: {pred}", classify_failure(pred, &mutated, &record));
    }
    Ok(())
}
