//! Turn "What is the maximum capacity ...?" into an ambiguous question by
//! splitting Capacity into two columns, then show what changed.

use std::path::PathBuf;

use practiq::corpus::{introspect, load_examples, DbStore};
use practiq::mutator::{mutate, CategoryLabel, MutationInput};
use practiq::provider::MockProvider;
use practiq::sqlkit::execute;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let corpus = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/minicorpus");
    let all = load_examples(&corpus.join("dev.json"))?.examples;
    let example = all.iter().find(|e| e.example_id == "ex00001").expect("stadium example");

    let work = tempfile::tempdir()?;
    let db = DbStore::new(corpus.join("database")).checkout(&example.db_id, work.path())?;
    let schema = introspect(&db)?;
    let input = MutationInput { example, schema: &schema, db: &db, seed: 7 };
    let record = mutate(CategoryLabel::AmbiguousSelectColumn, input, &MockProvider::new(7), &all)?;

    println!("question: {}", record.mutated_question);
    println!("removed:  {:?}", record.removed);
    println!("added:    {:?}", record.added);
    match execute(&db, &record.seed_sql) {
        Err(e) => println!("seed SQL now fails: {e}"),
        Ok(_) => println!("seed SQL still runs"),
    }
    for c in &record.clarified_sql_candidates {
        println!("{:>20}: {}", c.target, c.sql);
    }
    Ok(())
}
