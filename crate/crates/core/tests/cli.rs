//! The `biasaudit` binary, driven as a user would.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn biasaudit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_biasaudit"))
        .args(args)
        .env_remove("BIASAUDIT_CACHE_DIR")
        .output()
        .unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = biasaudit(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn error_record(out: &Output) -> Value {
    let stderr = String::from_utf8_lossy(&out.stderr);
    let line = stderr
        .lines()
        .rev()
        .find(|l| l.starts_with('{'))
        .expect("json error on stderr");
    serde_json::from_str(line).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn synth_then_every_pipeline_command() {
    let dir = tempfile::tempdir().unwrap();
    let work = dir.path();
    let synth = work.join("synth");
    ok(&[
        "synth",
        "--preset",
        "planted",
        "--docs-per-gender",
        "300",
        "--seed",
        "3",
        "--out",
        s(&synth),
    ]);
    let corpus = synth.join("corpus.jsonl");
    assert_eq!(fs::read_to_string(&corpus).unwrap().lines().count(), 600);

    let ingest = work.join("ingest");
    ok(&["ingest", "--corpus", s(&corpus), "--out", s(&ingest)]);
    let summary: Value =
        serde_json::from_str(&fs::read_to_string(ingest.join("ingest.json")).unwrap()).unwrap();
    assert_eq!(summary["corpus"]["records"], 600);
    assert_eq!(summary["seed"], 0);
    // ingested records carry their field and reload cleanly
    let ingested = ingest.join("corpus.jsonl");
    assert!(fs::read_to_string(&ingested).unwrap().contains("\"field\""));

    let vocab = work.join("vocab");
    ok(&[
        "vocab",
        "--corpus",
        s(&ingested),
        "--mode",
        "adjnoun",
        "--k",
        "20",
        "--out",
        s(&vocab),
    ]);
    let text = fs::read_to_string(vocab.join("vocab.txt")).unwrap();
    assert!(text.starts_with("# biasaudit-vocabulary mode=adjnoun k=20"));

    let train = work.join("train");
    ok(&["train", "--corpus", s(&ingested), "--out", s(&train)]);
    let model = fs::read_to_string(train.join("model.txt")).unwrap();
    assert!(model.contains("beautiful"));

    let audit = work.join("audit");
    ok(&[
        "audit",
        "--corpus",
        s(&ingested),
        "--runs",
        "10",
        "--seed",
        "5",
        "--out",
        s(&audit),
    ]);
    for name in [
        "report.json",
        "summary.csv",
        "vocab.txt",
        "model.txt",
        "correlations.csv",
        "frequencies.csv",
        "topics.json",
    ] {
        assert!(audit.join(name).is_file(), "{name} missing");
    }
    let report: Value =
        serde_json::from_str(&fs::read_to_string(audit.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["schema_version"], 1);
    assert_eq!(report["seed"], 5);
    assert_eq!(report["config"]["runs"], 10);
    assert!(report["config"].get("out").is_none());
    // the audit model is the one `train` fits for the same seed
    assert_eq!(
        fs::read_to_string(audit.join("model.txt")).unwrap(),
        ok_model(&ingested, work, 5)
    );
    let rendered = ok(&["report", "--input", s(&audit.join("report.json"))]);
    assert!(rendered.contains("female-predictive words"));

    let fields = work.join("fields");
    ok(&[
        "fields",
        "--corpus",
        s(&ingested),
        "--runs",
        "5",
        "--out",
        s(&fields),
    ]);
    let per_field: Value =
        serde_json::from_str(&fs::read_to_string(fields.join("report.json")).unwrap()).unwrap();
    assert!(per_field["fields"].as_object().unwrap().len() >= 2);
    assert!(
        fs::read_to_string(fields.join("summary.csv"))
            .unwrap()
            .lines()
            .count()
            >= 3
    );
}

fn ok_model(corpus: &Path, work: &Path, seed: u64) -> String {
    let out = work.join(format!("train-{seed}"));
    ok(&[
        "train",
        "--corpus",
        s(corpus),
        "--seed",
        &seed.to_string(),
        "--out",
        s(&out),
    ]);
    fs::read_to_string(out.join("model.txt")).unwrap()
}

#[test]
fn null_synth_audit_is_near_chance() {
    let dir = tempfile::tempdir().unwrap();
    let synth = dir.path().join("synth");
    ok(&[
        "synth",
        "--preset",
        "null",
        "--seed",
        "11",
        "--out",
        s(&synth),
    ]);
    let audit = dir.path().join("audit");
    ok(&[
        "audit",
        "--corpus",
        s(&synth.join("corpus.jsonl")),
        "--seed",
        "11",
        "--out",
        s(&audit),
    ]);
    let report: Value =
        serde_json::from_str(&fs::read_to_string(audit.join("report.json")).unwrap()).unwrap();
    let mean = report["experiment"]["mean"].as_f64().unwrap();
    assert!((0.48..=0.52).contains(&mean), "mean {mean}");
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let synth = dir.path().join("synth");
    ok(&["synth", "--docs-per-gender", "200", "--out", s(&synth)]);
    let config = dir.path().join("run.toml");
    fs::write(
        &config,
        "corpus = \"synth/corpus.jsonl\"\nruns = 3\nk = 15\nseed = 8\n\n[analysis]\ntop_words = 4\n",
    )
    .unwrap();
    let out = dir.path().join("out");
    ok(&[
        "audit",
        "--config",
        s(&config),
        "--k",
        "25",
        "--out",
        s(&out),
    ]);
    let report: Value =
        serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["config"]["k"], 25);
    assert_eq!(report["experiment"]["runs"], 3);
    assert_eq!(
        report["predictive_words"]["female"]
            .as_array()
            .unwrap()
            .len(),
        4
    );
}

#[test]
fn synth_spec_file() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("gen.toml");
    fs::write(
        &spec,
        r#"docs_per_gender = 10
base_words = ["bold", "quiet"]
words_per_doc = 2
seed = 4

[[planted]]
word = "brave"
p_female = 1.0
p_male = 0.0

[[occupations]]
name = "pilot"
share = 1.0
"#,
    )
    .unwrap();
    let out = dir.path().join("out");
    ok(&["synth", "--spec", s(&spec), "--out", s(&out)]);
    let text = fs::read_to_string(out.join("corpus.jsonl")).unwrap();
    assert_eq!(text.lines().count(), 20);
    assert_eq!(text.lines().filter(|l| l.contains("brave")).count(), 10);
}

#[test]
fn exit_codes_and_error_records() {
    let dir = tempfile::tempdir().unwrap();

    let missing = biasaudit(&["audit", "--corpus", "/definitely/not/here.jsonl"]);
    assert_eq!(missing.status.code(), Some(2));
    assert_eq!(error_record(&missing)["error"]["kind"], "config");

    let no_corpus = biasaudit(&["vocab", "--out", s(dir.path())]);
    assert_eq!(no_corpus.status.code(), Some(2));

    let bad = dir.path().join("bad.jsonl");
    fs::write(&bad, "{\"id\":\"1\",\"gender\":\"female\"\nnot json\n").unwrap();
    let malformed = biasaudit(&["audit", "--corpus", s(&bad), "--out", s(dir.path())]);
    assert_eq!(malformed.status.code(), Some(3));
    let record = error_record(&malformed);
    assert_eq!(record["error"]["kind"], "data");
    assert!(record["error"]["message"]
        .as_str()
        .unwrap()
        .contains("line 1"));

    let one_gender = dir.path().join("one.jsonl");
    fs::write(
        &one_gender,
        "{\"id\":\"1\",\"gender\":\"female\",\"occupation\":\"poet\",\"overview\":\"She was bold.\"}\n",
    )
    .unwrap();
    let single = biasaudit(&["audit", "--corpus", s(&one_gender), "--out", s(dir.path())]);
    assert_eq!(single.status.code(), Some(3));

    // output path is a regular file, so the directory cannot be created
    let blocker = dir.path().join("blocker");
    fs::write(&blocker, "x").unwrap();
    let synth = biasaudit(&[
        "synth",
        "--docs-per-gender",
        "5",
        "--out",
        s(&blocker.join("sub")),
    ]);
    assert_eq!(synth.status.code(), Some(4));
    assert_eq!(error_record(&synth)["error"]["kind"], "io");

    let usage = biasaudit(&["audit", "--mode", "verbs"]);
    assert_eq!(usage.status.code(), Some(2));
}

#[test]
fn fetch_offline_from_cache() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("cache");
    fs::create_dir_all(&cache).unwrap();
    fs::write(
        cache.join("Q1.json"),
        r#"{"extract":"Ada was a mathematician."}"#,
    )
    .unwrap();
    let manifest = dir.path().join("pages.tsv");
    fs::write(
        &manifest,
        "id\ttitle\tgender\toccupation\nQ1\tAda Lovelace\tfemale\tMathematician\n",
    )
    .unwrap();
    let out = dir.path().join("out");
    let result = Command::new(env!("CARGO_BIN_EXE_biasaudit"))
        .args([
            "fetch",
            "--manifest",
            s(&manifest),
            "--endpoint",
            "http://127.0.0.1:9/",
            "--out",
            s(&out),
        ])
        .env("BIASAUDIT_CACHE_DIR", &cache)
        .output()
        .unwrap();
    assert!(
        result.status.success(),
        "{}",
        String::from_utf8_lossy(&result.stderr)
    );
    let corpus = fs::read_to_string(out.join("corpus.jsonl")).unwrap();
    assert!(corpus.contains("\"occupation\":\"mathematician\""));
    assert!(corpus.contains("Ada was a mathematician."));
}
