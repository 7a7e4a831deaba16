//! Build a five-turn clarification conversation and a three-turn helpful one.

use std::path::PathBuf;

use practiq::corpus::{introspect, load_examples, DbStore};
use practiq::dialogue::{assemble_conversation, AssembleOptions};
use practiq::mutator::{mutate, CategoryLabel, MutationInput};
use practiq::provider::MockProvider;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let corpus = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/minicorpus");
    let all = load_examples(&corpus.join("dev.json"))?.examples;
    let provider = MockProvider::new(7);

    for (id, category, helpful) in [
        ("ex00011", CategoryLabel::AmbiguousWhereColumn, false),
        ("ex00001", CategoryLabel::AmbiguousSelectColumn, true),
    ] {
        let example = all.iter().find(|e| e.example_id == id).expect("example in corpus");
        let work = tempfile::tempdir()?;
        let db = DbStore::new(corpus.join("database")).checkout(&example.db_id, work.path())?;
        let schema = introspect(&db)?;
        let input = MutationInput { example, schema: &schema, db: &db, seed: 7 };
        let record = mutate(category, input, &provider, &all)?;
        let opts = AssembleOptions { seed: 7, pipeline_version: "example".into(), helpful };
        let conv = assemble_conversation(record, &db, &schema, &provider, &opts)?;
        println!("== {} ({} turns)", conv.id, conv.turns.len());
        for t in &conv.turns {
            println!("{:?}: {}", t.kind, t.text);
            if let Some(sql) = &t.sql {
                println!("    {sql}");
            }
        }
    }
    Ok(())
}
