use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use practiq::corpus::{load_catalog, load_examples, CorpusExample, SchemaDef};
use practiq::dialogue::Conversation;
use practiq::mutator::CategoryLabel;
use practiq::pipeline::{generate_to_file, run_generation, validate, GenConfig, GenStats};
use practiq::provider::{MockProvider, Task};

fn corpus_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/minicorpus")
}

fn inputs() -> (Vec<SchemaDef>, Vec<CorpusExample>) {
    let catalog = load_catalog(&corpus_dir().join("tables.json")).unwrap();
    let examples = load_examples(&corpus_dir().join("dev.json")).unwrap().examples;
    (catalog, examples)
}

fn config(work: &Path, seed: u64) -> GenConfig {
    let mut c = GenConfig::new(corpus_dir().join("database"), seed);
    c.workdir = work.to_path_buf();
    c.jobs = 4;
    c
}

fn counts(convs: &[Conversation]) -> BTreeMap<CategoryLabel, usize> {
    let mut m = BTreeMap::new();
    for c in convs {
        *m.entry(c.category).or_default() += 1;
    }
    m
}

fn full_run(seed: u64) -> (Vec<Conversation>, GenStats, tempfile::TempDir) {
    let (catalog, examples) = inputs();
    let work = tempfile::tempdir().unwrap();
    let (convs, stats) = run_generation(&catalog, &examples, &config(work.path(), seed), &MockProvider::new(seed));
    (convs, stats, work)
}

#[test]
fn stats_reconcile_with_output() {
    let (convs, stats, work) = full_run(7);
    assert_eq!(stats.emitted, convs.len());
    let by_cat = counts(&convs);
    for (cat, n) in stats.table() {
        assert_eq!(by_cat.get(&cat).copied().unwrap_or(0), n, "{cat}");
    }
    let mut seeds: Vec<&str> = convs.iter().map(|c| c.provenance.seed_example_id.as_str()).collect();
    let total = seeds.len();
    seeds.dedup();
    assert_eq!(seeds.len(), total, "an example seeded two conversations");
    assert!(validate(&convs, &corpus_dir().join("database"), work.path(), 4).is_empty());
    for c in &convs {
        if c.helpful_sql.is_some() {
            assert!(matches!(
                c.category,
                CategoryLabel::AmbiguousSelectColumn | CategoryLabel::AmbiguousWhereColumn
            ));
        }
    }
}

#[test]
fn quotas_and_category_filters_hold() {
    let (catalog, examples) = inputs();
    let work = tempfile::tempdir().unwrap();
    let mut c = config(work.path(), 3);
    c.categories = vec![CategoryLabel::NonexistentSelectColumn, CategoryLabel::UnsupportedJoin];
    c.quotas.insert(CategoryLabel::UnsupportedJoin, 2);
    c.quotas.insert(CategoryLabel::Answerable, 1);
    let (convs, stats) = run_generation(&catalog, &examples, &c, &MockProvider::new(3));
    let by_cat = counts(&convs);
    assert!(by_cat.keys().all(|k| matches!(
        k,
        CategoryLabel::NonexistentSelectColumn | CategoryLabel::UnsupportedJoin | CategoryLabel::Answerable
    )));
    assert_eq!(by_cat.get(&CategoryLabel::UnsupportedJoin), Some(&2));
    assert_eq!(by_cat.get(&CategoryLabel::Answerable), Some(&1));
    assert!(by_cat.get(&CategoryLabel::NonexistentSelectColumn).is_some_and(|n| *n > 0));
    assert_eq!(stats.per_category[&CategoryLabel::UnsupportedJoin].attempted, examples.len());
}

#[test]
fn seeds_change_the_dataset() {
    let (a, _, _w1) = full_run(1);
    let (b, _, _w2) = full_run(2);
    assert_ne!(a, b);
}

#[test]
fn refusing_provider_fails_the_binary_gate() {
    let (catalog, examples) = inputs();
    let work = tempfile::tempdir().unwrap();
    let provider = MockProvider::new(7).refusing(Task::BinaryCategoryCheck);
    let (convs, stats) = run_generation(&catalog, &examples[..8], &config(work.path(), 7), &provider);
    assert!(convs.is_empty());
    assert!(stats.binary_gate.rejected > 0);
    assert_eq!(stats.binary_gate.reject_rate, 1.0);
}

#[test]
fn interrupted_output_resumes_to_the_same_bytes() {
    let (catalog, examples) = inputs();
    let examples = &examples[..12];
    let work = tempfile::tempdir().unwrap();
    let clean = work.path().join("clean.jsonl");
    let resumed = work.path().join("resumed.jsonl");
    let provider = MockProvider::new(7);
    let c = config(&work.path().join("w"), 7);
    generate_to_file(&catalog, examples, &c, &provider, &clean).unwrap();
    let text = std::fs::read_to_string(&clean).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines.len() > 2);
    let mut partial = lines[..lines.len() / 2].join("\n");
    partial.push_str("\n{\"format_version\": 1, \"id\": \"trunc");
    std::fs::write(&resumed, partial).unwrap();
    let (_, stats) = generate_to_file(&catalog, examples, &c, &provider, &resumed).unwrap();
    assert_eq!(stats.resumed, lines.len() / 2);
    assert_eq!(std::fs::read(&clean).unwrap(), std::fs::read(&resumed).unwrap());
}
