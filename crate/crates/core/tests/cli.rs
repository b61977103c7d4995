mod common;

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use common::*;

fn histgen(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_histgen"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn generate(out: &Path, extra: &[&str]) -> Output {
    let system = system_dir();
    let donors = donor_dirs();
    let mut args = vec![
        "generate".to_string(),
        "--system".into(),
        system.display().to_string(),
        "--out".into(),
        out.display().to_string(),
    ];
    for d in &donors {
        args.push("--donor".into());
        args.push(d.display().to_string());
    }
    args.extend(extra.iter().map(|s| s.to_string()));
    let refs: Vec<&str> = args.iter().map(String::as_str).collect();
    histgen(&refs)
}

fn write_config(dir: &Path, body: &str) -> String {
    let p = dir.join("run.toml");
    fs::write(&p, body).unwrap();
    p.display().to_string()
}

#[test]
fn generate_populates_the_output_directory() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "max_iterations = 25\n");
    let out = tmp.path().join("h");
    let o = generate(&out, &["--config", &cfg, "--seed", "4"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["ledger.ndjson", "traces.ndjson", "debug.ndjson", "run.json", "revisions/0000", "features/0000.json"] {
        assert!(out.join(f).exists(), "missing {f}");
    }
}

#[test]
fn missing_donor_exits_with_input_error() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("h");
    let o = histgen(&[
        "generate",
        "--system",
        &system_dir().display().to_string(),
        "--donor",
        "/definitely/not/here",
        "--out",
        &out.display().to_string(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!o.stderr.is_empty());
}

#[test]
fn unknown_preset_and_bad_distribution_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    let o = generate(&tmp.path().join("a"), &["--preset", "nope"]);
    assert_eq!(o.status.code(), Some(2));
    let cfg = write_config(
        tmp.path(),
        "generators = [\"removeFeature\", \"mutAdd\"]\n[distribution]\nremoveFeature = 0.5\nmutAdd = 0.4\n",
    );
    let o = generate(&tmp.path().join("b"), &["--config", &cfg]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn non_empty_output_directory_is_refused() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("keep"), "x").unwrap();
    let o = generate(tmp.path(), &[]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(fs::read_to_string(tmp.path().join("keep")).unwrap(), "x");
}

#[test]
fn identical_invocations_write_identical_trees() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "max_iterations = 40\n");
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    assert_eq!(generate(&a, &["--config", &cfg, "--seed", "9"]).status.code(), Some(0));
    assert_eq!(generate(&b, &["--config", &cfg, "--seed", "9"]).status.code(), Some(0));
    assert_eq!(dir_contents(&a), dir_contents(&b));
    let c = tmp.path().join("c");
    assert_eq!(generate(&c, &["--config", &cfg, "--seed", "10"]).status.code(), Some(0));
    assert_ne!(dir_contents(&a), dir_contents(&c));
}

#[test]
fn stats_validate_and_replay_round_trip() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "max_iterations = 30\n");
    let out = tmp.path().join("h");
    assert_eq!(generate(&out, &["--config", &cfg, "--seed", "2"]).status.code(), Some(0));
    let outs = out.display().to_string();

    let s = histgen(&["stats", "--out", &outs]);
    assert_eq!(s.status.code(), Some(0));
    let table = String::from_utf8(s.stdout).unwrap();
    let mut rows = table.lines();
    assert_eq!(rows.next(), Some("revision,distinct_features,total_features,repository_count,loc_per_variant"));
    assert_eq!(rows.count(), fs::read_dir(out.join("revisions")).unwrap().count());
    assert_eq!(histgen(&["stats", "--out", &outs]).stdout, table.as_bytes());
    let long = tmp.path().join("long.csv");
    let s = histgen(&["stats", "--out", &outs, "--long", "--output", &long.display().to_string()]);
    assert_eq!(s.status.code(), Some(0));
    assert!(fs::read_to_string(&long).unwrap().starts_with("revision,metric,key,value\n"));

    let report = tmp.path().join("report.json");
    let v = histgen(&["validate", "--out", &outs, "--report", &report.display().to_string()]);
    assert_eq!(v.status.code(), Some(0), "{}", String::from_utf8_lossy(&v.stderr));
    assert!(fs::read_to_string(&report).unwrap().contains("\"violations\": []"));

    let dest = tmp.path().join("final");
    let r = histgen(&["replay", "--out", &outs, "--dest", &dest.display().to_string()]);
    assert_eq!(r.status.code(), Some(0));
    let last = fs::read_dir(out.join("revisions")).unwrap().map(|e| e.unwrap().path()).max().unwrap();
    assert_eq!(dir_contents(&dest), dir_contents(&last));
}

#[test]
fn tampered_snapshot_fails_validation() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "max_iterations = 10\n");
    let out = tmp.path().join("h");
    assert_eq!(generate(&out, &["--config", &cfg]).status.code(), Some(0));
    let main = out.join("revisions/0003/calc/src/main.ml");
    let mut text = fs::read_to_string(&main).unwrap();
    text.push_str("// tampered\n");
    fs::write(&main, text).unwrap();
    let v = histgen(&["validate", "--out", &out.display().to_string()]);
    assert_eq!(v.status.code(), Some(1));
    assert!(out.join("validation.json").exists());
}

#[test]
fn stats_on_an_invalid_history_exits_4() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(histgen(&["stats", "--out", &tmp.path().display().to_string()]).status.code(), Some(4));
    let cfg = write_config(tmp.path(), "max_iterations = 5\n");
    let out = tmp.path().join("h");
    assert_eq!(generate(&out, &["--config", &cfg]).status.code(), Some(0));
    fs::remove_file(out.join("features/0002.json")).unwrap();
    assert_eq!(histgen(&["stats", "--out", &out.display().to_string()]).status.code(), Some(4));
}

#[test]
fn featureless_initial_revision_has_zero_distinct_features() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "max_iterations = 1\n");
    let out = tmp.path().join("h");
    assert_eq!(generate(&out, &["--config", &cfg]).status.code(), Some(0));
    let s = histgen(&["stats", "--out", &out.display().to_string()]);
    let table = String::from_utf8(s.stdout).unwrap();
    assert!(table.lines().nth(1).unwrap().starts_with("0,0,0,1,calc="));
}
