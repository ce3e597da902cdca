use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures")
}

fn bin(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_flavorbench"))
        .args(args)
        .current_dir(dir)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = bin(dir, args);
    assert!(out.status.success(), "{args:?} exited {:?}\n{}", out.status.code(), String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn write_config(dir: &Path, extra: &str) -> PathBuf {
    let text = format!(
        r#"{{
  "paths": {{"export": "{export}", "data": "stores", "split": "split.json", "index": "bm25.json", "cache": "evidence", "out": "runs"}},
  "agent": {{"split_seed": 7, "instance_seed": 7, "splits": ["train", "dev", "test"]}},
  "evidence": {{"fixture": "{search}"}}{extra}
}}"#,
        export = fixtures().join("foods20").display(),
        search = fixtures().join("search_fixture.json").display(),
    );
    let path = dir.join("run.json");
    std::fs::write(&path, text).unwrap();
    path
}

fn prepare(dir: &Path) -> String {
    let cfg = write_config(dir, "").display().to_string();
    let manifest = ok(dir, &["ingest", "--config", &cfg]);
    assert!(manifest.contains("\"foods\": 20"), "{manifest}");
    ok(dir, &["split", "--config", &cfg]);
    ok(dir, &["index", "--config", &cfg]);
    ok(dir, &["collect-evidence", "--config", &cfg]);
    cfg
}

#[test]
fn oracle_workflow_end_to_end() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let cfg = prepare(dir);

    let split: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.join("split.json")).unwrap()).unwrap();
    assert_eq!(split["train"].as_array().unwrap().len(), 16);

    let stats = ok(dir, &["stats", "--config", &cfg, "--out", "stats.json"]);
    assert!(stats.contains("fraction_below_100"));
    ok(dir, &["encode", "--config", &cfg, "--out", "features.jsonl"]);
    assert_eq!(std::fs::read_to_string(dir.join("features.jsonl")).unwrap().lines().count(), 20);
    ok(dir, &["pca", "--config", &cfg, "--out", "pca"]);
    for f in ["pca.json", "pca.csv", "pca.svg"] {
        assert!(dir.join("pca").join(f).is_file(), "{f}");
    }

    for task in ["mfp", "mpc"] {
        for pipeline in ["zero-shot", "icl", "agent"] {
            let line = ok(dir, &["run", "--config", &cfg, "--task", task, "--pipeline", pipeline, "--offline"]);
            assert!(line.contains("20 answered"), "{line}");
            ok(dir, &["eval", "--config", &cfg, "--task", task, "--pipeline", pipeline]);
        }
    }
    let table = ok(dir, &["report", "--config", &cfg]);
    assert_eq!(table.lines().filter(|l| l.contains("mock:oracle")).count(), 3, "{table}");
    assert!(table.lines().skip(2).all(|l| l.contains("100.0") && l.contains("1.000")), "{table}");
    let first = std::fs::read(dir.join("runs/report.json")).unwrap();

    // Rerunning resumes from the journal and reproduces every output.
    let results = dir.join("runs/mfp-agent-oracle/results.jsonl");
    let before = std::fs::read(&results).unwrap();
    ok(dir, &["run", "--config", &cfg, "--task", "mfp", "--pipeline", "agent"]);
    assert_eq!(std::fs::read(&results).unwrap(), before);
    ok(dir, &["report", "--config", &cfg]);
    assert_eq!(std::fs::read(dir.join("runs/report.json")).unwrap(), first);
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();

    let bad = dir.join("bad.json");
    std::fs::write(&bad, r#"{"agent": {"limt": 3}}"#).unwrap();
    let out = bin(dir, &["split", "--config", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("agent.limt"));

    assert_eq!(bin(dir, &["run", "--pipeline", "nonsense"]).status.code(), Some(1));
    assert_eq!(bin(dir, &["run", "--limit", "11"]).status.code(), Some(1));
    assert_eq!(bin(dir, &["stats", "--data", "missing"]).status.code(), Some(2));

    let out = bin(dir, &["ingest", "--in", fixtures().join("nonexistent").to_str().unwrap(), "--out", "s"]);
    assert_eq!(out.status.code(), Some(2));

    // An http backend with networking disabled fails as an external service.
    let cfg = prepare(dir);
    let cfg_http = write_config(
        dir,
        r#", "backend": {"kind": "http", "model_name": "m", "http": {"url": "http://127.0.0.1:9/v1/chat/completions"}}"#,
    );
    let out = bin(dir, &["run", "--config", cfg_http.to_str().unwrap(), "--pipeline", "zero-shot", "--offline"]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).contains("20 failed (20 network)"));
    let _ = cfg;
}

#[test]
fn every_command_documents_its_defaults() {
    let tmp = tempfile::tempdir().unwrap();
    for cmd in
        ["fetch", "ingest", "split", "stats", "encode", "pca", "index", "collect-evidence", "run", "eval", "report"]
    {
        let out = bin(tmp.path(), &[cmd, "--help"]);
        assert_eq!(out.status.code(), Some(0));
        let text = String::from_utf8(out.stdout).unwrap();
        for line in text.lines().filter(|l| l.trim_start().starts_with("--") && !l.contains("--help")) {
            assert!(line.contains("[default:"), "{cmd}: {line}");
        }
    }
}
