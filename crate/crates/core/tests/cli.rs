use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn geofind(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_geofind"))
        .args(args)
        .current_dir(env!("CARGO_MANIFEST_DIR"))
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn write(dir: &tempfile::TempDir, name: &str, text: &str) -> PathBuf {
    let path = dir.path().join(name);
    fs::write(&path, text).unwrap();
    path
}

#[test]
fn run_midline_json() {
    let out = geofind(&["run", "examples/midline.gc"]);
    assert_eq!(code(&out), 0);
    let v: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["ranking"][0], "para(B,C,M,N)");
    assert_eq!(v["stop_reason"], "fixpoint");
    assert_eq!(v["discarded"]["empirically_false"], 0);
    assert_eq!(v["facts"][0]["derivation"]["rule"], "midline");
    assert_eq!(v["facts"][0]["verdict"]["status"], "holds");
    assert_eq!(v["config"]["models"], 5);
}

#[test]
fn run_is_byte_identical() {
    let args = [
        "run",
        "examples/inscribed.gc",
        "--master-seed",
        "9",
        "--mode",
        "filtered",
    ];
    assert_eq!(geofind(&args).stdout, geofind(&args).stdout);
}

#[test]
fn text_report_has_proof_trace() {
    let out = geofind(&["run", "examples/midline.gc", "--format", "text"]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).contains("para(B,C,M,N) ⇐ midline[midp(M,A,B), midp(N,A,C)]"));
}

#[test]
fn missing_input_exits_2() {
    assert_eq!(code(&geofind(&["run", "missing.gc"])), 2);
}

#[test]
fn usage_errors_exit_1() {
    assert_eq!(
        code(&geofind(&["run", "examples/midline.gc", "--frobnicate"])),
        1
    );
    assert_eq!(
        code(&geofind(&[
            "run",
            "examples/midline.gc",
            "--mode",
            "sideways"
        ])),
        1
    );
    assert_eq!(
        code(&geofind(&[
            "run",
            "examples/midline.gc",
            "--max-rounds",
            "0"
        ])),
        1
    );
    assert_eq!(
        code(&geofind(&[
            "run",
            "examples/midline.gc",
            "--threshold",
            "1.5"
        ])),
        1
    );
    assert_eq!(code(&geofind(&["explode"])), 1);
    let help = geofind(&["--help"]);
    assert_eq!(code(&help), 0);
    assert!(stdout(&help).contains("Usage"));
}

#[test]
fn parse_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(&dir, "bad.gc", "point A B\nmidpoint M A Z\n");
    let out = geofind(&["run", bad.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));
    let bad_rules = write(&dir, "bad.gr", "rule r: coll(A,B,C) => para(A,B,C,D)\n");
    assert_eq!(
        code(&geofind(&[
            "run",
            "examples/midline.gc",
            "--rules",
            bad_rules.to_str().unwrap()
        ])),
        2
    );
    assert_eq!(
        code(&geofind(&[
            "rules",
            "--validate",
            bad_rules.to_str().unwrap()
        ])),
        2
    );
    let bad_weights = write(&dir, "w.toml", "[weights]\nnovelty = 1\n");
    assert_eq!(
        code(&geofind(&[
            "run",
            "examples/midline.gc",
            "--weights",
            bad_weights.to_str().unwrap()
        ])),
        2
    );
}

#[test]
fn validate_bundled_rules() {
    let out = geofind(&["rules", "--validate", "rules/gddm-default.gr"]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).contains("12 rules"));
}

#[test]
fn degenerate_construction_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let c = write(
        &dir,
        "par.gc",
        "point A B\non_line C A B\non_line D A B\nintersect P A B C D\n",
    );
    assert_eq!(code(&geofind(&["run", c.to_str().unwrap()])), 3);
}

#[test]
fn unsound_rule_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let rules = write(
        &dir,
        "bad.gr",
        "rule bad: midp(M,A,B), midp(N,A,C) => perp(A,B,A,C)\n",
    );
    let out = geofind(&[
        "run",
        "examples/midline.gc",
        "--rules",
        rules.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 4);
    assert!(String::from_utf8_lossy(&out.stderr).contains("seed"));
}

#[test]
fn check_pappus() {
    let out = geofind(&[
        "check",
        "examples/pappus.gc",
        "coll(G,H,I)",
        "coll(A,B,D)",
        "--seeds",
        "100",
        "--format",
        "text",
    ]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    assert!(text.contains("holds  coll(G,H,I)"), "{text}");
    assert!(text.contains("fails  coll(A,B,D)"), "{text}");
    assert_eq!(
        code(&geofind(&["check", "examples/pappus.gc", "coll(G,H,Z)"])),
        2
    );
}

#[test]
fn saturate_and_rank() {
    let out = geofind(&["saturate", "examples/inscribed.gc", "--format", "text"]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).contains("cyclic(A,B,C,D) ⇐ equidistant-cyclic"));

    let out = geofind(&["rank", "examples/medial.gc", "--top", "2"]);
    assert_eq!(code(&out), 0);
    let v: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["ranking"].as_array().unwrap().len(), 2);
}

#[test]
fn weights_file_changes_ranking() {
    let dir = tempfile::tempdir().unwrap();
    let w = write(&dir, "w.toml", "threshold = 0.0\n[weights]\nobviousness = 1\nweight = 0\ncomplexity = 0\nsurprisingness = 0\nintensity = 0\nadaptivity = 0\nfocus = 0\nusefulness = 0\n");
    let out = geofind(&[
        "rank",
        "examples/inscribed.gc",
        "--weights",
        w.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);
    let v: Value = serde_json::from_str(&stdout(&out)).unwrap();
    let first = v["ranking"][0]["fact"].as_str().unwrap();
    assert!(first.starts_with("eqangle("), "{first}");
}

#[test]
fn strict_sides_drops_conditional_facts() {
    let out = geofind(&["run", "examples/midline.gc", "--strict-sides"]);
    assert_eq!(code(&out), 0);
    let v: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["facts"].as_array().unwrap().len(), 0);
}
