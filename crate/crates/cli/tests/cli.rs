use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use hashtopic::pipeline::{self, Manifest};

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name)
}

fn hashtopic(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hashtopic")).args(args).output().unwrap()
}

fn ok(args: &[&str]) {
    let out = hashtopic(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn stages_reproduce_the_pipeline() {
    let tmp = tempfile::tempdir().unwrap();
    let (whole, staged) = (tmp.path().join("whole"), tmp.path().join("staged"));
    ok(&["pipeline", "--config", s(&data("sample_config.json")), "--output-dir", s(&whole)]);

    let st = |name: &str| staged.join(name);
    ok(&["ingest", "--input", s(&data("sample.jsonl")), "--output-dir", s(&staged)]);
    ok(&["graph", "--docs", s(&st(pipeline::DOCUMENTS)), "--output-dir", s(&staged)]);
    ok(&["communities", "--graph", s(&st(pipeline::GRAPH)), "--nodes", s(&st(pipeline::GRAPH_NODES)), "--output-dir", s(&staged)]);
    ok(&["label", "--docs", s(&st(pipeline::DOCUMENTS)), "--partition", s(&st(pipeline::PARTITION)), "--output-dir", s(&staged)]);
    ok(&["fit", "--docs", s(&st(pipeline::LABELED)), "--constraint", s(&st(pipeline::CONSTRAINT)), "--output-dir", s(&staged)]);
    ok(&[
        "report",
        "--docs",
        s(&st(pipeline::LABELED)),
        "--vocab",
        s(&st(pipeline::VOCABULARY)),
        "--fit-dir",
        s(&staged),
        "--output-dir",
        s(&staged),
    ]);

    for name in pipeline::ARTIFACTS.iter().filter(|&&a| a != pipeline::MANIFEST) {
        assert_eq!(fs::read(whole.join(name)).unwrap(), fs::read(st(name)).unwrap(), "{name}");
    }
    let manifest: Manifest = serde_json::from_slice(&fs::read(whole.join(pipeline::MANIFEST)).unwrap()).unwrap();
    assert_eq!(manifest.artifacts.len(), pipeline::ARTIFACTS.len() - 1);
    for (name, digest) in &manifest.artifacts {
        assert_eq!(&pipeline::sha256_hex(&fs::read(whole.join(name)).unwrap()), digest, "{name}");
    }
}

#[test]
fn more_communities_than_components_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let res = hashtopic(&[
        "pipeline",
        "--config",
        s(&data("sample_config.json")),
        "--num-communities",
        "90",
        "--output-dir",
        s(&out),
    ]);
    assert!(!res.status.success());
    assert!(String::from_utf8_lossy(&res.stderr).contains("num_communities"));
    assert!(!out.exists());
}

#[test]
fn missing_input_fails_without_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let res = hashtopic(&["pipeline", "--input", s(&tmp.path().join("absent.jsonl")), "--output-dir", s(&out)]);
    assert!(!res.status.success());
    assert!(String::from_utf8_lossy(&res.stderr).contains("absent.jsonl"));
    assert!(!out.exists());
}

#[test]
fn unknown_config_field_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let config = tmp.path().join("config.json");
    fs::write(&config, r#"{"input_path": "x.jsonl", "resolutoin": 0.5}"#).unwrap();
    let res = hashtopic(&["pipeline", "--config", s(&config), "--output-dir", s(&tmp.path().join("out"))]);
    assert!(!res.status.success());
    assert!(String::from_utf8_lossy(&res.stderr).contains("resolutoin"));
}

#[test]
fn synth_is_seeded() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b, c) = (tmp.path().join("a.jsonl"), tmp.path().join("b.jsonl"), tmp.path().join("c.jsonl"));
    ok(&["synth", "--output", s(&a), "--docs", "50", "--seed", "3"]);
    ok(&["synth", "--output", s(&b), "--docs", "50", "--seed", "3"]);
    ok(&["synth", "--output", s(&c), "--docs", "50", "--seed", "4"]);
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    assert_ne!(fs::read(&a).unwrap(), fs::read(&c).unwrap());
    assert_eq!(fs::read_to_string(&a).unwrap().lines().count(), 50);
}
