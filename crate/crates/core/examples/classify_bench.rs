//! Build a few-shot classification prompt and score a mock provider on a
//! freshly generated dataset.

use std::path::PathBuf;

use practiq::bench::{build_classification_prompt, bundled_shots, run_classification, ClassifyConfig, ValueMode};
use practiq::corpus::{load_catalog, load_examples};
use practiq::pipeline::{run_generation, GenConfig};
use practiq::provider::{MockBehavior, MockProvider};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let corpus = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/minicorpus");
    let catalog = load_catalog(&corpus.join("tables.json"))?;
    let examples = load_examples(&corpus.join("dev.json"))?.examples;
    let work = tempfile::tempdir()?;
    let mut gen = GenConfig::new(corpus.join("database"), 7);
    gen.workdir = work.path().join("gen");
    let (dataset, _) = run_generation(&catalog, &examples, &gen, &MockProvider::new(7));

    let request = build_classification_prompt("| stadium | ... |", "What is the maximum capacity?", 1, bundled_shots())?;
    println!("1-shot prompt: {} messages, system prompt {} chars", request.messages.len(), request.system_prompt.len());

    let mut config = ClassifyConfig::new(corpus.join("database"));
    config.workdir = work.path().join("bench");
    config.k = 1;
    config.value_mode = ValueMode::LexicalAndOracle;
    let echo = run_classification(&dataset, &MockProvider::new(7), &config)?;
    let constant = MockProvider::new(7).with_behavior(MockBehavior::Constant("answerable".into()));
    let skewed = run_classification(&dataset, &constant, &config)?;
    println!("echo:       overall {:.3}", echo.overall);
    println!("answerable: overall {:.3}, excluding answerable {:.3}", skewed.overall, skewed.overall_excluding_answerable);
    if let Some(c) = &skewed.confusion {
        print!("{}", c.to_csv());
    }
    Ok(())
}
