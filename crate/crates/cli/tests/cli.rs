use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_strposet"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| {
        panic!(
            "bad JSON ({e}): {}\nstderr: {}",
            String::from_utf8_lossy(&o.stdout),
            String::from_utf8_lossy(&o.stderr)
        )
    })
}

fn gen(dir: &Path, name: &str, args: &[&str]) -> PathBuf {
    let path = dir.join(name);
    let mut all = vec!["gen"];
    all.extend_from_slice(args);
    all.extend_from_slice(&["-o", path.to_str().unwrap()]);
    let o = run(&all);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    path
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn gen_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = gen(dir.path(), "a.json", &["--model", "random", "--n1", "12", "--n2", "3", "--seed", "7"]);
    let b = gen(dir.path(), "b.json", &["--model", "random", "--n1", "12", "--n2", "3", "--seed", "7"]);
    assert_eq!(std::fs::read(a).unwrap(), std::fs::read(b).unwrap());
    let c = gen(dir.path(), "c.json", &["--model", "random", "--n1", "12", "--n2", "3", "--seed", "8"]);
    assert_ne!(std::fs::read(&c).unwrap(), std::fs::read(dir.path().join("a.json")).unwrap());
}

#[test]
fn gen_reads_a_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("params.json");
    std::fs::write(&cfg, r#"{"n1": 24, "n2": 5, "planted_pairs_per_point": 3, "seed": 2}"#).unwrap();
    let from_cfg = gen(dir.path(), "x.json", &["--model", "random", "--config", p(&cfg)]);
    let from_flags = gen(
        dir.path(),
        "y.json",
        &["--model", "random", "--n1", "24", "--n2", "5", "--planted", "3", "--seed", "2"],
    );
    assert_eq!(std::fs::read(from_cfg).unwrap(), std::fs::read(from_flags).unwrap());
}

#[test]
fn affine_lines_over_f2() {
    let dir = tempfile::tempdir().unwrap();
    let f = gen(dir.path(), "a.json", &["--model", "affine", "-p", "2", "-d", "1"]);
    let doc: Value = serde_json::from_slice(&std::fs::read(&f).unwrap()).unwrap();
    assert_eq!(doc["n1"], 6);
    assert_eq!(doc["n2"], 4);
    let o = run(&["check", p(&f), "--only", "J4", "--tmax", "2"]);
    assert_eq!(code(&o), 0);
    assert_eq!(json(&o)["holds"], true);
}

#[test]
fn fiber_dot_of_f0() {
    let dir = tempfile::tempdir().unwrap();
    let f = gen(dir.path(), "f0.json", &["--model", "f0"]);
    let o = run(&["fiber", p(&f), "--B", "d,e", "--dot"]);
    assert_eq!(code(&o), 0);
    let dot = String::from_utf8(o.stdout).unwrap();
    assert!(dot.starts_with("digraph"));
    assert_eq!(dot.matches("[label=\"(").count(), 6);
    assert!(dot.contains("label=\"{a,b}\""));

    let o = run(&["fiber", p(&f), "--B", "d,e"]);
    let doc = json(&o);
    assert_eq!(doc["nodes"].as_array().unwrap().len(), 6);
}

#[test]
fn mu_on_cusp() {
    let dir = tempfile::tempdir().unwrap();
    let f = gen(dir.path(), "cusp.json", &["--model", "cusp"]);
    let doc = json(&run(&["mu", p(&f), "--x", "P", "--m", "m"]));
    assert_eq!(doc["mu"], 7);
    assert_eq!(doc["ge4"], true);
}

#[test]
fn str_leq_with_witness() {
    let dir = tempfile::tempdir().unwrap();
    let f = gen(dir.path(), "f0.json", &["--model", "f0"]);
    let doc = json(&run(&["str-leq", p(&f), "--lhs", "a|d,e", "--rhs", "a,b|d,e"]));
    assert_eq!(doc["leq"], true);
    assert_eq!(doc["witness"], serde_json::json!(["a", "b"]));
    let doc = json(&run(&["str-leq", p(&f), "--lhs", "a,b|d,e", "--rhs", "a|d,e"]));
    assert_eq!(doc["leq"], false);
    // rays are written x|*
    let doc = json(&run(&["str-leq", p(&f), "--lhs", "a|*", "--rhs", "a,c|d"]));
    assert_eq!(doc["leq"], true);
}

#[test]
fn check_reports_and_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let f0 = gen(dir.path(), "f0.json", &["--model", "f0"]);
    let o = run(&["check", p(&f0), "--k", "1", "--only", "J2"]);
    assert_eq!(code(&o), 0);
    assert_eq!(json(&o)["reports"][0]["holds"], true);

    let cusp = gen(dir.path(), "cusp.json", &["--model", "cusp"]);
    let o = run(&["check", p(&cusp), "--only", "P5"]);
    assert_eq!(code(&o), 1);
    let doc = json(&o);
    let first = &doc["reports"][0]["witnesses"][0];
    assert_eq!(first["ok"], false);
    assert_eq!(first["instance"]["S"], serde_json::json!(["P"]));
    assert_eq!(first["instance"]["T"], serde_json::json!(["m"]));
}

#[test]
fn invalid_input_is_positioned() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\"version\": 1, \"n1\": 1, \"n2\": 1,\n \"incidence\": [[0, 0], [0, 0]]}").unwrap();
    let o = run(&["check", p(&bad)]);
    assert_eq!(code(&o), 3);
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("2:"), "{err}");
    assert!(err.contains("incidence[1]"), "{err}");

    let range = dir.path().join("range.json");
    std::fs::write(&range, r#"{"version": 1, "n1": 1, "n2": 1, "incidence": [[0, 4]]}"#).unwrap();
    assert_eq!(code(&run(&["check", p(&range)])), 3);
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(code(&run(&["frobnicate"])), 2);
    let dir = tempfile::tempdir().unwrap();
    let f = gen(dir.path(), "cusp.json", &["--model", "cusp"]);
    assert_eq!(code(&run(&["mu", p(&f), "--x", "Q", "--m", "m"])), 2);
    assert_eq!(code(&run(&["mu", p(&f), "--x", "y1", "--m", "n2"])), 2);
    assert_eq!(code(&run(&["check", p(&f), "--only", "Q9"])), 2);
}

#[test]
fn tier_cap_is_enforced() {
    let dir = tempfile::tempdir().unwrap();
    let big = gen(dir.path(), "a32.json", &["--model", "affine", "-p", "3", "-d", "2"]);
    let o = run(&["check", p(&big), "--only", "J4"]);
    assert_eq!(code(&o), 3);
    assert!(String::from_utf8_lossy(&o.stderr).contains("tier cap"));
    let o = run(&["--max-tier", "512", "check", p(&big), "--only", "J4"]);
    assert_eq!(code(&o), 0);
    assert_eq!(code(&run(&["--max-tier", "600", "check", p(&big)])), 2);
}

#[test]
fn roundtrip_verdicts() {
    let dir = tempfile::tempdir().unwrap();
    let a21 = gen(dir.path(), "a21.json", &["--model", "affine", "-p", "2", "-d", "1"]);
    let o = run(&["roundtrip", p(&a21), "--seed", "5"]);
    assert_eq!(code(&o), 0);
    let v = json(&o);
    assert_eq!(v["recovered"], true);
    assert!(v["probes"].as_u64().unwrap() > 0);

    let f0 = gen(dir.path(), "f0.json", &["--model", "f0"]);
    let o = run(&["roundtrip", p(&f0)]);
    assert_eq!(code(&o), 1);
    let v = json(&o);
    assert_eq!(v["recovered"], false);
    assert!(v["conflicts"][0].as_str().unwrap().contains("share"));

    let o = run(&["roundtrip", p(&a21), "--corrupt"]);
    assert_eq!(code(&o), 1);
    assert!(!json(&o)["conflicts"].as_array().unwrap().is_empty());

    let o = run(&["roundtrip", p(&f0), "--require-battery"]);
    assert_eq!(code(&o), 1);
    let v = json(&o);
    assert_eq!(v["refused"], true);
    assert!(!v["battery"]["reasons"].as_array().unwrap().is_empty());
}

#[test]
fn roundtrip_output_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let f = gen(dir.path(), "r.json", &["--model", "random", "--n1", "24", "--n2", "5", "--planted", "3", "--seed", "1"]);
    let a = run(&["roundtrip", p(&f), "--seed", "9"]);
    let b = run(&["--sequential", "roundtrip", p(&f), "--seed", "9"]);
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn reconstruct_from_emitted_table() {
    let dir = tempfile::tempdir().unwrap();
    let f = gen(dir.path(), "a31.json", &["--model", "affine", "-p", "3", "-d", "1"]);
    let target = dir.path().join("target.json");
    let table = dir.path().join("table.json");
    let o = run(&[
        "roundtrip",
        p(&f),
        "--seed",
        "4",
        "--emit-target",
        p(&target),
        "--emit-table",
        p(&table),
    ]);
    assert_eq!(code(&o), 0);
    let o = run(&["reconstruct", "--source", p(&f), "--target", p(&target), "--table", p(&table)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let doc = json(&o);
    assert_eq!(doc["recovered"], true);
    // labels travel with their elements, so the recovered map pairs equal labels
    for pair in doc["rho"]["h1"].as_array().unwrap() {
        assert_eq!(pair[0], pair[1]);
    }
}

#[test]
fn dot_of_fragment() {
    let dir = tempfile::tempdir().unwrap();
    let f = gen(dir.path(), "f0.json", &["--model", "f0"]);
    let o = run(&["dot", p(&f)]);
    assert_eq!(code(&o), 0);
    let dot = String::from_utf8(o.stdout).unwrap();
    // three edges from the minimum, five incidences
    assert_eq!(dot.matches("->").count(), 8);
    let o = run(&["dot", p(&f), "--B", "d"]);
    assert!(String::from_utf8(o.stdout).unwrap().contains("(a,c|d)"));
}
