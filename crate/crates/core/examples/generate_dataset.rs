//! Run the whole generator over the mini corpus with the mock provider,
//! validate the result and print per-category counts.
//!
//! cargo run --release --example generate_dataset -- 7

use std::path::PathBuf;

use practiq::corpus::{load_catalog, load_examples};
use practiq::pipeline::{run_generation, validate, GenConfig};
use practiq::provider::MockProvider;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let corpus = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/minicorpus");
    let seed: u64 = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(7);
    let catalog = load_catalog(&corpus.join("tables.json"))?;
    let examples = load_examples(&corpus.join("dev.json"))?.examples;

    let work = tempfile::tempdir()?;
    let mut config = GenConfig::new(corpus.join("database"), seed);
    config.workdir = work.path().to_path_buf();
    let (convs, stats) = run_generation(&catalog, &examples, &config, &MockProvider::new(seed));

    for (cat, n) in stats.table() {
        println!("{:<32} {n:>4}", cat.token());
    }
    println!("gates rejected: executability {}, mention {}, binary {}",
        stats.executability_gate.rejected, stats.mention_gate.rejected, stats.binary_gate.rejected);
    let violations = validate(&convs, &config.db_dir, work.path(), config.jobs);
    println!("{} conversations, {} violations", convs.len(), violations.len());
    Ok(())
}
