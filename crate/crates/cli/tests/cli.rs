use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ergm-lasso"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap_or(-1)
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

const EDGES_ONLY: &str = r#"{"terms": [{"term": "edges"}]}"#;
const TWO_TERMS: &str = r#"{"terms": [{"term": "edges"}, {"term": "gwesp", "alpha": 0.5}]}"#;

/// Fast settings for runs on small networks.
const QUICK: &[&str] = &["--m-per-iter", "40", "--bridge-points", "5", "--bridge-draws", "100", "--cov-draws", "300"];

fn simulated(dir: &Path, setup: &str, nodes: &str) -> PathBuf {
    let out = dir.join(format!("sim_{setup}"));
    let o = run(&["simulate", "--setup", setup, "--nodes", nodes, "--draws", "1", "--out", s(&out)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    out
}

#[test]
fn malformed_edge_line_is_reported_with_its_number() {
    let dir = TempDir::new().unwrap();
    let edges = write(dir.path(), "g.edges", "a b\nb c\na b c\n");
    let spec = write(dir.path(), "spec.json", EDGES_ONLY);
    let out = dir.path().join("out");
    let o = run(&["fit", "--edges", s(&edges), "--spec", s(&spec), "--out", s(&out)]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains(":3:"), "{}", stderr(&o));
}

#[test]
fn missing_attribute_column_is_named() {
    let dir = TempDir::new().unwrap();
    let edges = write(dir.path(), "g.edges", "a b\nb c\n");
    let attrs = write(dir.path(), "a.csv", "id,age\na,1\nb,2\nc,3\n");
    let spec = write(
        dir.path(),
        "spec.json",
        r#"{"terms": [{"term": "edges"}, {"term": "nodematch", "column": "office"}]}"#,
    );
    let out = dir.path().join("out");
    let o = run(&["fit", "--edges", s(&edges), "--attrs", s(&attrs), "--spec", s(&spec), "--out", s(&out)]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("office"), "{}", stderr(&o));
}

#[test]
fn edges_only_fit_recovers_the_log_odds() {
    let dir = TempDir::new().unwrap();
    let sim = simulated(dir.path(), "bernoulli", "40");
    let spec = write(dir.path(), "spec.json", EDGES_ONLY);
    let out = dir.path().join("fit");
    let edges = sim.join("draw_00000.edges");
    let mut args = vec!["fit", "--edges", s(&edges), "--spec", s(&spec), "--out", s(&out)];
    args.extend_from_slice(QUICK);
    let o = run(&args);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let report: Value = serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    let n_edges = report["n_edges"].as_f64().unwrap();
    let p = n_edges / (40.0 * 39.0 / 2.0);
    let est = report["terms"][0]["estimate"].as_f64().unwrap();
    assert!((est - (p / (1.0 - p)).ln()).abs() < 0.05, "{est} vs density {p}");
    for f in ["trace.csv", "spec.standardized.json", "manifest.json"] {
        assert!(out.join(f).exists(), "{f}");
    }
}

#[test]
fn simulated_bernoulli_density_matches_the_coefficient() {
    let dir = TempDir::new().unwrap();
    let spec = write(dir.path(), "spec.json", EDGES_ONLY);
    let out = dir.path().join("sim");
    let o = run(&[
        "simulate", "--spec", s(&spec), "--theta", "-1.5", "--nodes", "30", "--draws", "20", "--out", s(&out),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let mut total = 0.0;
    for k in 0..20 {
        let text = fs::read_to_string(out.join(format!("draw_{k:05}.edges"))).unwrap();
        total += text.lines().filter(|l| l.split_whitespace().count() == 2).count() as f64;
    }
    let density = total / (20.0 * 435.0);
    let expected = 1.0 / (1.0 + 1.5f64.exp());
    // 8700 dyads: standard error about 0.004.
    assert!((density - expected).abs() < 0.015, "{density} vs {expected}");
}

#[test]
fn exact_log_normalizer_at_zero() {
    let dir = TempDir::new().unwrap();
    let spec = write(dir.path(), "spec.json", TWO_TERMS);
    let out = dir.path().join("exact");
    let o = run(&["exact", "--spec", s(&spec), "--nodes", "4", "--theta", "0,0", "--out", s(&out)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let v: Value = serde_json::from_str(&fs::read_to_string(out.join("exact.json")).unwrap()).unwrap();
    let lk = v["log_kappa"].as_f64().unwrap();
    assert!((lk - 6.0 * 2f64.ln()).abs() < 1e-12);
    assert_eq!(v["n_graphs"].as_u64(), Some(64));
}

#[test]
fn exact_refuses_large_networks() {
    let dir = TempDir::new().unwrap();
    let spec = write(dir.path(), "spec.json", TWO_TERMS);
    let out = dir.path().join("exact");
    let o = run(&["exact", "--spec", s(&spec), "--nodes", "9", "--out", s(&out)]);
    assert_eq!(code(&o), 4, "{}", stderr(&o));
    assert!(stderr(&o).contains("capacity"));
}

#[test]
fn non_empty_output_needs_force() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("out");
    fs::create_dir(&out).unwrap();
    write(&out, "keep.txt", "x");
    let o = run(&["simulate", "--setup", "bernoulli", "--nodes", "10", "--draws", "1", "--out", s(&out)]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("--force"));
    let o = run(&["simulate", "--setup", "bernoulli", "--nodes", "10", "--draws", "1", "--out", s(&out), "--force"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
}

fn path_run(dir: &Path, edges: &Path, spec: &Path, name: &str, grid: &str) -> (PathBuf, Output) {
    let out = dir.join(name);
    let mut args = vec![
        "path", "--edges", s(edges), "--spec", s(spec), "--out", s(&out), "--lambda-grid", grid, "--plot",
        "--standardize-draws", "200",
    ];
    args.extend_from_slice(QUICK);
    let o = run(&args);
    (out, o)
}

#[test]
fn path_outputs_are_deterministic_and_plotted() {
    let dir = TempDir::new().unwrap();
    let sim = simulated(dir.path(), "gwesp", "20");
    let spec = write(
        dir.path(),
        "spec.json",
        r#"{"terms": [{"term": "edges"}, {"term": "gwesp", "alpha": 0.5}, {"term": "gwdegree", "alpha": 0.5}]}"#,
    );
    let edges = sim.join("draw_00000.edges");
    let (a, oa) = path_run(dir.path(), &edges, &spec, "a", "geom:6:0.05");
    let (b, ob) = path_run(dir.path(), &edges, &spec, "b", "geom:6:0.05");
    assert!(matches!(code(&oa), 0 | 3), "{}", stderr(&oa));
    assert_eq!(code(&oa), code(&ob));
    for f in ["path.csv", "path_raw.csv", "ranking.csv", "path.svg", "spec.standardized.json"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f} differs");
    }
    let svg = fs::read_to_string(a.join("path.svg")).unwrap();
    assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
    assert_eq!(svg.matches("<path ").count(), 2);
    let path_csv = fs::read_to_string(a.join("path.csv")).unwrap();
    assert_eq!(path_csv.lines().count(), 1 + 7);
}

#[test]
fn huge_penalty_zeroes_every_penalized_term() {
    let dir = TempDir::new().unwrap();
    let sim = simulated(dir.path(), "gwesp", "20");
    let spec = write(
        dir.path(),
        "spec.json",
        r#"{"terms": [{"term": "edges"}, {"term": "gwesp", "alpha": 0.5}, {"term": "gwnsp", "alpha": 0.5}]}"#,
    );
    let (out, o) = path_run(dir.path(), &sim.join("draw_00000.edges"), &spec, "p", "1000");
    assert!(matches!(code(&o), 0 | 3), "{}", stderr(&o));
    let text = fs::read_to_string(out.join("path.csv")).unwrap();
    let row: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[0], "1000");
    assert!(row[2..].iter().all(|v| v.parse::<f64>().unwrap() == 0.0), "{row:?}");
    let ranking = fs::read_to_string(out.join("ranking.csv")).unwrap();
    assert!(ranking.lines().skip(1).all(|l| l.contains("NA")), "{ranking}");
}
