use std::path::Path;
use std::process::{Command, Output, Stdio};
use std::io::Write;

use serde_json::Value;
use tempfile::TempDir;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_rough-angle"));
    c.env("ROUGH_ANGLE_THREADS", "2");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).stdin(Stdio::null()).output().unwrap()
}

fn run_with_stdin(args: &[&str], input: &[u8]) -> Output {
    let mut child = bin().args(args).stdin(Stdio::piped()).stdout(Stdio::piped()).stderr(Stdio::piped()).spawn().unwrap();
    child.stdin.take().unwrap().write_all(input).unwrap();
    child.wait_with_output().unwrap()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stderr)))
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn path(dir: &TempDir, name: &str) -> String {
    dir.path().join(name).to_str().unwrap().to_owned()
}

fn write(dir: &TempDir, name: &str, text: &str) -> String {
    let p = path(dir, name);
    std::fs::write(&p, text).unwrap();
    p
}

fn collinear_csv(n: usize) -> String {
    (0..n).map(|i| (0..n).map(|j| i.abs_diff(j).to_string()).collect::<Vec<_>>().join(",") + "\n").collect()
}

fn strip_timestamp(mut v: Value) -> Value {
    v.as_object_mut().unwrap().remove("generated_at");
    v
}

#[test]
fn sra_check_on_snowflaked_path_at_alpha_equal_beta() {
    let dir = TempDir::new().unwrap();
    let p = path(&dir, "path.json");
    assert_eq!(code(&run(&["gen-dse", "--n", "17", "--beta", "0.5", "--out", &p])), 0);
    let out = run(&["sra-check", "--in", &p, "--alpha", "0.5"]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert_eq!(v["is_sra"], true);
    assert_eq!(v["max_subset"]["size"], 17);
    assert!(v["violations"].as_array().unwrap().is_empty());
}

#[test]
fn max_sra_on_six_collinear_points() {
    let dir = TempDir::new().unwrap();
    let p = write(&dir, "line.csv", &collinear_csv(6));
    let out = run(&["max-sra", "--in", &p, "--alpha", "0.9"]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert_eq!(v["certificate"]["size"], 2);
    assert_eq!(v["certificate"]["optimal"], true);
    assert_eq!(v["free_order"], serde_json::json!({ "status": "exact", "order": 3 }));
}

#[test]
fn constants_for_three_points() {
    let out = run(&["constants", "--m", "3", "--theta", "0.5"]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert_eq!(v["c_m_theta"]["decimal"], "78");
    assert_eq!(v["c_m_theta"]["decimal_exact"], true);
}

#[test]
fn negative_verdicts_exit_two() {
    let dir = TempDir::new().unwrap();
    let line = write(&dir, "line.csv", &collinear_csv(4));
    assert_eq!(code(&run(&["sra-check", "--in", &line, "--alpha", "0.9"])), 2);
    let bad = write(&dir, "bad.csv", "0,1,5\n1,0,1\n5,1,0\n");
    assert_eq!(code(&run(&["validate", "--in", &bad])), 2);
    let not_dse = write(&dir, "nd.csv", "0,2,1\n2,0,1\n1,1,0\n");
    assert_eq!(code(&run(&["dse-check", "--in", &not_dse])), 2);
    let out = run(&["refute-weird", "--theta", "0.2", "--alpha", "0.9", "--n", "3", "--seed", "11", "--budget", "20000"]);
    assert_eq!(code(&out), 2);
    assert_eq!(json(&out)["refutation"]["status"], "feasible");
}

#[test]
fn errors_exit_one_and_name_the_field() {
    let dir = TempDir::new().unwrap();
    let line = write(&dir, "line.csv", &collinear_csv(4));
    let out = run(&["sra-check", "--in", &line, "--alpha", "1.5"]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("alpha"));

    let out = run(&["sra-check", "--in", &line]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("`alpha`"));

    let asym = write(&dir, "asym.csv", "0,1\n2,0\n");
    let out = run(&["validate", "--in", &asym]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("not symmetric"));

    let out = run(&["critical-alpha", "--in", &path(&dir, "missing.csv")]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("`in`"));

    let out = run(&["max-sra", "--in", &line, "--alpha", "0.5", "--format", "csv"]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("`format`"));

    let out = bin().args(["critical-alpha", "--in", &line]).env("ROUGH_ANGLE_THREADS", "many").output().unwrap();
    assert_eq!(code(&out), 1);
}

#[test]
fn reports_are_deterministic_apart_from_the_timestamp() {
    let dir = TempDir::new().unwrap();
    let cases: Vec<Vec<&str>> = vec![
        vec!["gen-dse", "--n", "12", "--seed", "5", "--model", "hyperbolic"],
        vec!["gen-curve", "--seed", "3", "--dim", "4"],
        vec!["refute-weird", "--theta", "0.2", "--alpha", "0.9", "--seed", "9", "--budget", "2000"],
        vec!["constants", "--alpha", "0.8", "--k", "4"],
    ];
    for args in cases {
        let a = json(&run(&args));
        let b = json(&bin().args(&args).env("ROUGH_ANGLE_THREADS", "1").output().unwrap());
        assert!(a.get("generated_at").is_some());
        assert_eq!(strip_timestamp(a), strip_timestamp(b), "{args:?}");
    }
    let p = path(&dir, "p.json");
    run(&["gen-dse", "--n", "14", "--seed", "2", "--out", &p]);
    let a = std::fs::read(&p).unwrap();
    run(&["gen-dse", "--n", "14", "--seed", "2", "--out", &p]);
    let b = std::fs::read(&p).unwrap();
    let strip = |bytes: &[u8]| strip_timestamp(serde_json::from_slice(bytes).unwrap());
    assert_eq!(strip(&a), strip(&b));
}

#[test]
fn pipeline_from_curve_to_extraction() {
    let dir = TempDir::new().unwrap();
    let curve = path(&dir, "curve.json");
    let dse = path(&dir, "dse.json");
    assert_eq!(code(&run(&["gen-curve", "--seed", "11", "--out", &curve])), 0);
    assert_eq!(code(&run(&["curve-check", "--in", &curve])), 0);
    assert_eq!(code(&run(&["curve-to-dse", "--in", &curve, "--out", &dse])), 0);
    let check = run(&["dse-check", "--in", &dse]);
    assert_eq!(code(&check), 0);
    assert_eq!(json(&check)["two_lemma"]["diameter_chain_holds"], true);
    let out = run(&["extract", "--in", &dse, "--alpha", "0.8"]);
    assert_ne!(code(&out), 1, "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&out);
    assert!(v["extraction"]["result"]["outcome"].is_string());
    assert!(v["constants"]["theta_max"].is_number());
}

#[test]
fn standard_input_pipes_compose() {
    let curve = run(&["gen-curve", "--seed", "4"]).stdout;
    let dse = run_with_stdin(&["curve-to-dse"], &curve);
    assert_eq!(code(&dse), 0);
    let out = run_with_stdin(&["dse-check", "--in", "-"], &dse.stdout);
    assert_eq!(code(&out), 0);
    assert_eq!(json(&out)["dse"]["is_dse"], true);
}

#[test]
fn csv_outputs_are_plot_ready() {
    let dir = TempDir::new().unwrap();
    let out = run(&["gen-dse", "--n", "3", "--beta", "0.5", "--format", "csv"]);
    assert_eq!(String::from_utf8(out.stdout).unwrap().lines().next().unwrap(), "0,1,1.4142135623730951");

    let cloud = write(&dir, "cloud.json", r#"{"model":"euclidean","dim":1,"coords":[[0],[1],[2],[3]]}"#);
    let out = run(&["net-embed", "--in", &cloud, "--r", "1.5", "--format", "csv"]);
    assert_eq!(code(&out), 0);
    assert_eq!(String::from_utf8(out.stdout).unwrap(), "point,z0,z3\n0,0,3\n1,1,2\n2,2,1\n3,3,0\n");

    let out = run(&["doubling", "--in", &cloud, "--scales", "0.5,1", "--format", "csv"]);
    assert_eq!(String::from_utf8(out.stdout).unwrap().lines().next().unwrap(), "scale,lambda,center");

    let out = run(&["gen-curve", "--seed", "1", "--steps", "3", "--format", "csv"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 5);
    assert!(text.starts_with("t,x0,x1\n0,"));
}

#[test]
fn point_cloud_commands() {
    let dir = TempDir::new().unwrap();
    let disk = write(
        &dir,
        "disk.json",
        r#"{"model":"euclidean","dim":2,"coords":[[0,0],[1,0],[0,1],[-1,0],[0,-1],[0.5,0.5]]}"#,
    );
    let out = run(&["net-embed", "--in", &disk, "--r", "0.8"]);
    let v = json(&out);
    assert!(v["upper"].as_f64().unwrap() <= 1.0 + 1e-12);
    assert!(v["gamma"].as_f64().unwrap() > 0.0);

    let out = run(&["freeness-cover", "--in", &disk, "--alpha", "0.7", "--r", "1", "--R", "2"]);
    assert_eq!(code(&out), 0);
    assert_eq!(json(&out)["holds"], true);

    let line = write(&dir, "line.json", r#"{"model":"euclidean","dim":2,"coords":[[0,0],[1,0],[2,0]]}"#);
    let out = run(&["angles", "--in", &line, "--alpha", "0.9"]);
    assert_eq!(code(&out), 0);
    assert_eq!(json(&out)["wide"].as_array().unwrap().len(), 1);

    let thin = write(&dir, "thin.json", r#"{"model":"euclidean","dim":2,"coords":[[-0.8,0],[0,0.6],[0.8,0]]}"#);
    let out = run(&["angles", "--in", &thin, "--alpha", "0.5"]);
    assert_eq!(code(&out), 2);
    assert_eq!(json(&out)["sets_agree"], false);
}

/// Top-level keys of each command's report, frozen for schema 1.0.0. Changing them
/// requires bumping the schema version and this table together.
const FROZEN: &[(&str, &str, &[&str])] = &[
    ("1.0.0", "sra-check", &["alpha", "command", "critical_alpha", "generated_at", "is_sra", "max_subset", "params", "schema_version", "tol", "violations"]),
    ("1.0.0", "gen-dse", &["command", "dist", "gap_d", "generated_at", "length_l", "n", "order", "params", "ratio_l_over_d", "schema_version"]),
    ("1.0.0", "gen-curve", &["command", "dim", "generated_at", "model", "params", "points", "profile", "quadratic", "schema_version", "step", "times"]),
    ("1.0.0", "constants", &["alpha", "c_m_theta", "command", "generated_at", "k", "m", "n_sound", "n_theta_alpha", "notes", "params", "ramsey_bound", "ramsey_bound_tight", "schema_version", "theta", "theta_max", "weird_limit"]),
];

fn keys(v: &Value) -> Vec<String> {
    let mut k: Vec<String> = v.as_object().unwrap().keys().cloned().collect();
    k.sort();
    k
}

#[test]
fn schema_is_frozen_for_its_version() {
    let dir = TempDir::new().unwrap();
    let p = path(&dir, "path.json");
    run(&["gen-dse", "--n", "5", "--beta", "0.5", "--out", &p]);
    for &(version, command, expected) in FROZEN {
        assert_eq!(version, rough_angle_cli::SCHEMA_VERSION, "schema changed: update the frozen table");
        let args: Vec<&str> = match command {
            "sra-check" => vec![command, "--in", &p, "--alpha", "0.5"],
            "gen-dse" => vec![command, "--n", "5", "--beta", "0.5"],
            "gen-curve" => vec![command, "--seed", "1"],
            _ => vec![command, "--alpha", "0.8", "--k", "4"],
        };
        let v = json(&run(&args));
        assert_eq!(v["schema_version"], version);
        assert_eq!(keys(&v), expected.iter().map(|s| s.to_string()).collect::<Vec<_>>(), "{command}");
    }
}

#[test]
fn every_report_reparses_under_its_loader() {
    let dir = TempDir::new().unwrap();
    let dse = path(&dir, "d.json");
    run(&["gen-dse", "--n", "9", "--seed", "3", "--model", "sphere", "--out", &dse]);
    let text = std::fs::read_to_string(&dse).unwrap();
    assert_eq!(rough_angle::io::parse_dse(&text).unwrap().len(), 9);

    let curve = path(&dir, "c.json");
    run(&["gen-curve", "--seed", "3", "--dim", "3", "--model", "l1", "--out", &curve]);
    let text = std::fs::read_to_string(&curve).unwrap();
    assert_eq!(rough_angle::io::parse_curve(&text).unwrap().len(), 41);

    let line = write(&dir, "l.csv", &collinear_csv(5));
    let flake = path(&dir, "f.json");
    run(&["snowflake", "--in", &line, "--beta", "0.5", "--out", &flake]);
    let m = rough_angle::io::parse_metric(&std::fs::read_to_string(&flake).unwrap()).unwrap();
    assert_eq!(m.d(0, 4), 2.0);
    assert!(Path::new(&flake).exists());
}
