use std::path::PathBuf;

use practiq::cli::{run, EXIT_INPUT, EXIT_OK, EXIT_PROVIDER, EXIT_VALIDATION};

fn corpus_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/minicorpus")
}

fn arg(p: &std::path::Path) -> String {
    p.display().to_string()
}

#[test]
fn alpha_reads_a_ratings_file() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("r.csv");
    std::fs::write(&csv, "unit_id,rater_id,score\nu1,a,4\nu1,b,4\nu2,a,2\nu2,b,2\nu3,a,5\n").unwrap();
    assert_eq!(run(["practiq", "alpha", "--ratings", &arg(&csv), "--level", "ordinal"]), EXIT_OK);
    assert_eq!(run(["practiq", "alpha", "--ratings", "/nonexistent.csv"]), EXIT_INPUT);
}

#[test]
fn exit_codes_follow_the_failure() {
    let dir = tempfile::tempdir().unwrap();
    let c = corpus_dir();
    assert_eq!(run(["practiq", "frobnicate"]), EXIT_INPUT);
    assert_eq!(run(["practiq", "stats", "--dataset", "/nonexistent.jsonl"]), EXIT_INPUT);
    let out = dir.path().join("d.jsonl");
    let base = [
        "practiq".to_string(),
        "generate".into(),
        "--catalog".into(),
        arg(&c.join("tables.json")),
        "--examples".into(),
        arg(&c.join("dev.json")),
        "--db-dir".into(),
        arg(&c.join("database")),
        "--out".into(),
        arg(&out),
    ];
    let mut bad_quota = base.to_vec();
    bad_quota.extend(["--quota".into(), "Unsupported_Join".into()]);
    assert_eq!(run(bad_quota), EXIT_INPUT);

    let mut live = base.to_vec();
    live.extend(["--provider".into(), "live".into()]);
    if std::env::var("PRACTIQ_LLM_ENDPOINT").is_err() {
        assert_eq!(run(live), EXIT_PROVIDER);
    }

    let mut small = base.to_vec();
    small.extend(["--categories".into(), "Nonexistent_SELECT_Column".into(), "--seed".into(), "5".into()]);
    assert_eq!(run(small), EXIT_OK);
    assert!(dir.path().join("d.stats.json").is_file());
    assert_eq!(run(["practiq", "stats", "--dataset", &arg(&out)]), EXIT_OK);

    let text = std::fs::read_to_string(&out).unwrap();
    let mut lines: Vec<serde_json::Value> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    for turn in lines[0]["turns"].as_array_mut().unwrap() {
        if turn.get("sql").is_some_and(|s| !s.is_null()) {
            turn["sql"] = "SELECT no_such_column FROM nowhere".into();
        }
    }
    let tampered = dir.path().join("t.jsonl");
    std::fs::write(&tampered, lines.iter().map(|l| l.to_string() + "\n").collect::<String>()).unwrap();
    assert_eq!(
        run(["practiq", "validate", "--dataset", &arg(&tampered), "--db-dir", &arg(&c.join("database"))]),
        EXIT_VALIDATION
    );
}
