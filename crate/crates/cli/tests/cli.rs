use std::path::{Path, PathBuf};
use std::process::Command;

use corrcomplete::models::{xccy_closed_form, XccyParams, XCCY_FIXTURE};
use corrcomplete::pattern::{parse_dense, parse_partial};
use corrcomplete::Format;
use corrcomplete_cli::run;
use tempfile::TempDir;

struct Out {
    code: i32,
    stdout: String,
    stderr: String,
}

fn cli(args: &[&str]) -> Out {
    let mut stdout = Vec::new();
    let mut stderr = Vec::new();
    let mut full = vec!["corrcomplete"];
    full.extend_from_slice(args);
    let code = run(full, &mut stdout, &mut stderr);
    Out {
        code,
        stdout: String::from_utf8(stdout).unwrap(),
        stderr: String::from_utf8(stderr).unwrap(),
    }
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

const PATH3: &str = r#"{"labels":["a","b","c"],"entries":[
  {"row":"a","col":"b","value":0.6},{"row":"b","col":"c","value":0.5}]}"#;

const CYCLE4: &str = ",p,q,r,s\np,1,0.5,,0.5\nq,0.5,1,0.5,\nr,,0.5,1,0.5\ns,0.5,,0.5,1\n";

#[test]
fn completes_three_path() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "p.json", PATH3);
    let out = cli(&["complete", "--input", s(&input)]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    let h = parse_dense(&out.stdout, Format::Json).unwrap();
    assert!((h.get_by_label("a", "c").unwrap() - 0.3).abs() <= 1e-15);
    assert!(out.stdout.contains("0.3"));
}

#[test]
fn csv_output_and_report() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "p.json", PATH3);
    let output = dir.path().join("h.csv");
    let report = dir.path().join("r.json");
    let out = cli(&[
        "complete",
        "--input",
        s(&input),
        "--output",
        s(&output),
        "--out-format",
        "csv",
        "--report",
        s(&report),
    ]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    let h = parse_dense(&std::fs::read_to_string(&output).unwrap(), Format::Csv).unwrap();
    assert_eq!(h.n(), 3);
    let r: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(r["fill_in"].as_array().unwrap().len(), 1);
    assert_eq!(r["fill_in"][0]["row"], "a");
    assert_eq!(r["fill_in"][0]["col"], "c");
}

#[test]
fn four_cycle_is_rejected() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "c4.csv", CYCLE4);
    let out = cli(&["complete", "--input", s(&input)]);
    assert_eq!(out.code, 3);
    for l in ["p", "q", "r", "s"] {
        assert!(out.stderr.contains(l));
    }
    let out = cli(&["explain", "--input", s(&input)]);
    assert_eq!(out.code, 3);
    assert!(out.stdout.contains("chordal: no"));
    assert!(out.stdout.contains("p - q - r - s"));
}

#[test]
fn xccy_fill_matches_closed_form() {
    let dir = TempDir::new().unwrap();
    let params = "0.2,0.3,0.4,0.5,0.6,0.7";
    let pattern = dir.path().join("x.json");
    assert_eq!(cli(&["gen", "xccy", "--params", params, "--output", s(&pattern)]).code, 0);
    let report = dir.path().join("r.json");
    let out = cli(&["complete", "--input", s(&pattern), "--report", s(&report)]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    let h = parse_dense(&out.stdout, Format::Json).unwrap();
    let want = xccy_closed_form(&XccyParams::from_slice(&XCCY_FIXTURE).unwrap()).unwrap();
    assert!(h.values().max_abs_diff(want.values()) <= 1e-15);
    let r: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(r["fill_in"].as_array().unwrap().len(), 9);
    assert_eq!(r["root"], serde_json::json!(["E", "A", "X"]));
}

#[test]
fn root_choice_is_honoured_and_validated() {
    let dir = TempDir::new().unwrap();
    let pattern = dir.path().join("x.json");
    cli(&["gen", "xccy", "--params", "0.2,0.3,0.4,0.5,0.6,0.7", "--output", s(&pattern)]);
    let a = cli(&["complete", "--input", s(&pattern)]);
    let b = cli(&["complete", "--input", s(&pattern), "--root", "A,nu_A"]);
    assert_eq!(b.code, 0, "{}", b.stderr);
    let ha = parse_dense(&a.stdout, Format::Json).unwrap();
    let hb = parse_dense(&b.stdout, Format::Json).unwrap();
    assert!(ha.values().max_abs_diff(hb.values()) <= 1e-12);
    assert_eq!(cli(&["complete", "--input", s(&pattern), "--root", "E,A"]).code, 2);
}

#[test]
fn check_accepts_completion_and_rejects_perturbation() {
    let dir = TempDir::new().unwrap();
    let pattern = write(&dir, "p.json", PATH3);
    let good = write(
        &dir,
        "h.csv",
        ",a,b,c\na,1,0.6,0.3\nb,0.6,1,0.5\nc,0.3,0.5,1\n",
    );
    let out = cli(&["check", "--input", s(&good), "--pattern", s(&pattern), "--oracle"]);
    assert_eq!(out.code, 0, "{}", out.stdout);
    let v: serde_json::Value = serde_json::from_str(&out.stdout).unwrap();
    assert_eq!(v["pd"], true);
    assert!(v["oracle_gap"].as_f64().unwrap().abs() <= 1e-9);

    let bad = write(
        &dir,
        "bad.csv",
        ",a,b,c\na,1,0.6,0.31\nb,0.6,1,0.5\nc,0.31,0.5,1\n",
    );
    let out = cli(&["check", "--input", s(&bad), "--pattern", s(&pattern)]);
    assert_ne!(out.code, 0);
    assert_eq!(out.code, 1);
}

#[test]
fn check_identity_and_indefinite() {
    let dir = TempDir::new().unwrap();
    let id = write(&dir, "i.csv", ",a,b\na,1,0\nb,0,1\n");
    assert_eq!(cli(&["check", "--input", s(&id)]).code, 0);
    let bad = write(
        &dir,
        "n.csv",
        ",a,b,c\na,1,0.9,-0.9\nb,0.9,1,0.9\nc,-0.9,0.9,1\n",
    );
    let out = cli(&["check", "--input", s(&bad)]);
    assert_eq!(out.code, 4);
    assert!(out.stdout.contains("\"pd\": false"));
}

#[test]
fn explain_lists_structure_and_writes_dot() {
    let dir = TempDir::new().unwrap();
    let pattern = dir.path().join("x.json");
    cli(&["gen", "xccy", "--params", "0.2,0.3,0.4,0.5,0.6,0.7", "--output", s(&pattern)]);
    let dot = dir.path().join("x.dot");
    let out = cli(&["explain", "--input", s(&pattern), "--dot", s(&dot)]);
    assert_eq!(out.code, 0);
    assert!(out.stdout.contains("chordal: yes"));
    assert!(out.stdout.contains("C1 {E, A, X}"));
    assert!(out.stdout.contains("C0 -- C1  separator {E}"));
    assert!(out.stdout.contains("merge order (root C1)"));
    let d = std::fs::read_to_string(&dot).unwrap();
    assert!(d.starts_with("graph corrcomplete {"));
    assert!(d.contains("cluster_pattern") && d.contains("cluster_cliques"));
    assert!(d.contains("c1 -- c3 [label=\"{X}\"]"));
}

#[test]
fn gen_is_deterministic() {
    let a = cli(&["gen", "random", "--n", "12", "--seed", "42"]);
    let b = cli(&["gen", "random", "--n", "12", "--seed", "42"]);
    let c = cli(&["gen", "random", "--n", "12", "--seed", "43"]);
    assert_eq!(a.code, 0);
    assert_eq!(a.stdout, b.stdout);
    assert_ne!(a.stdout, c.stdout);
    let x1 = cli(&["gen", "xccy", "--params", "0.2,0.3,0.4,0.5,0.6,0.7", "--format", "csv"]);
    let x2 = cli(&["gen", "xccy", "--params", "0.2,0.3,0.4,0.5,0.6,0.7", "--format", "csv"]);
    assert_eq!(x1.stdout, x2.stdout);
}

#[test]
fn gen_ncurrency_shapes() {
    let out = cli(&["gen", "ncurrency", "--count", "5"]);
    assert_eq!(out.code, 0);
    let m = parse_partial(&out.stdout, Format::Json).unwrap();
    assert_eq!(m.n(), 22);
    assert_eq!(m.specified_count(), 1 + 5 * 5);

    let dir = TempDir::new().unwrap();
    let params = write(
        &dir,
        "p.json",
        r#"{"e_nu_e":0.1,"foreign":[{"k_nu_k":0.2,"e_k":0.3,"e_x":0.4,"k_x":0.5,"x_nu_x":0.6}]}"#,
    );
    let out = cli(&["gen", "ncurrency", "--count", "3", "--params-file", s(&params)]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    assert_eq!(parse_partial(&out.stdout, Format::Json).unwrap().n(), 14);
    let out = cli(&["gen", "ncurrency", "--count", "0"]);
    assert_eq!(out.code, 2);
}

#[test]
fn bad_inputs_map_to_exit_codes() {
    let dir = TempDir::new().unwrap();
    assert_eq!(cli(&["complete", "--input", "/nonexistent/x.json"]).code, 5);
    let bad = write(&dir, "b.json", r#"{"labels":["a","a"],"entries":[]}"#);
    assert_eq!(cli(&["complete", "--input", s(&bad)]).code, 2);
    let big = write(
        &dir,
        "big.json",
        r#"{"labels":["a","b"],"entries":[{"row":"a","col":"b","value":1.0}]}"#,
    );
    assert_eq!(cli(&["complete", "--input", s(&big)]).code, 2);
    let indefinite = write(
        &dir,
        "ind.json",
        r#"{"labels":["a","b","c"],"entries":[
          {"row":"a","col":"b","value":0.9},{"row":"b","col":"c","value":0.9},
          {"row":"a","col":"c","value":-0.6}]}"#,
    );
    let out = cli(&["complete", "--input", s(&indefinite)]);
    assert_eq!(out.code, 4);
    assert!(out.stderr.contains('a') && out.stderr.contains('c'));
    assert_eq!(cli(&["gen", "xccy", "--params", "0.2,0.3"]).code, 2);
    assert_eq!(cli(&["frobnicate"]).code, 2);
    assert_eq!(cli(&["--help"]).code, 0);
}

#[test]
fn pipeline_over_many_seeds() {
    let dir = TempDir::new().unwrap();
    let pattern = dir.path().join("p.json");
    let dense = dir.path().join("h.json");
    for seed in 0..1000u64 {
        let n = (1 + seed % 20).to_string();
        let seed_s = seed.to_string();
        let g = cli(&["gen", "random", "--n", &n, "--seed", &seed_s, "--output", s(&pattern)]);
        assert_eq!(g.code, 0);
        let c = cli(&["complete", "--input", s(&pattern), "--output", s(&dense)]);
        assert_eq!(c.code, 0, "seed {seed}: {}", c.stderr);
        let k = cli(&["check", "--input", s(&dense), "--pattern", s(&pattern)]);
        assert_eq!(k.code, 0, "seed {seed}: {}", k.stdout);
    }
}

fn binary() -> Command {
    Command::new(env!("CARGO_BIN_EXE_corrcomplete"))
}

#[test]
fn real_process_pipeline() {
    let dir = TempDir::new().unwrap();
    for seed in [1u64, 7, 99] {
        let g = binary()
            .args(["gen", "random", "--n", "15", "--seed", &seed.to_string()])
            .output()
            .unwrap();
        assert!(g.status.success());
        let pattern = write(&dir, "p.json", std::str::from_utf8(&g.stdout).unwrap());
        let mut child = binary()
            .args(["complete", "--input", "-", "--format", "json"])
            .stdin(std::process::Stdio::piped())
            .stdout(std::process::Stdio::piped())
            .spawn()
            .unwrap();
        use std::io::Write;
        child.stdin.take().unwrap().write_all(&g.stdout).unwrap();
        let c = child.wait_with_output().unwrap();
        assert!(c.status.success());
        let dense = write(&dir, "h.json", std::str::from_utf8(&c.stdout).unwrap());
        let k = binary()
            .args(["check", "--input", s(&dense), "--pattern", s(&pattern)])
            .output()
            .unwrap();
        assert_eq!(k.status.code(), Some(0));
    }
}

#[test]
fn real_process_exit_codes_and_tolerance_env() {
    let dir = TempDir::new().unwrap();
    let cyc = write(&dir, "c4.csv", CYCLE4);
    let path = write(&dir, "p.json", PATH3);
    let st = binary().args(["complete", "--input", s(&cyc)]).output().unwrap();
    assert_eq!(st.status.code(), Some(3));
    let st = binary()
        .args(["complete", "--input", s(&path)])
        .env("CORRCOMPLETE_TOL", "not-a-number")
        .output()
        .unwrap();
    assert_eq!(st.status.code(), Some(2));
    // a pivot threshold above every clique pivot turns PD blocks into failures
    let st = binary()
        .args(["complete", "--input", s(&path)])
        .env("CORRCOMPLETE_TOL", "0.9")
        .output()
        .unwrap();
    assert_eq!(st.status.code(), Some(4));
    let st = binary()
        .args(["complete", "--input", s(&path)])
        .env("CORRCOMPLETE_TOL", "1e-9")
        .output()
        .unwrap();
    assert_eq!(st.status.code(), Some(0));
}
