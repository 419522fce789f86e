//! Command-line experiments over the `rough_angle` library.
//!
//! Every subcommand produces one JSON document: the command's result merged with
//! `schema_version`, `command`, `generated_at` and the resolved `params`. Generator
//! commands emit data files (distance matrices, DSE spaces, curves) in that same
//! document, so their output can be fed straight back through `--in`.

use std::io::{IsTerminal, Read, Write};
use std::path::PathBuf;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Map, Value};

use rough_angle::constants::{globq_bound, ConstantsBundle};
use rough_angle::curves::{
    curve_diameter, curve_length, curve_to_dse_with_tol, gen_quasiconvex_trajectory, is_self_contracted,
    random_quadratic, CurveError, Profile,
};
use rough_angle::dse::{check_two_lemma, gap_d, gen_random_dse, gen_snowflaked_path, is_dse, length_l, DseSpace};
use rough_angle::extract::{
    extract_sra_subspace, refute_weird_angles, ExtractOptions, Extraction, RefutationStatus, DEFAULT_SEARCH_BUDGET,
};
use rough_angle::io::{
    parse_curve, parse_dse, parse_metric, parse_point_cloud, write_embedding_csv, write_matrix_csv, CurveFile,
    MatrixFile,
};
use rough_angle::metric::{from_point_cloud, validate_metric, ModelKind};
use rough_angle::net::{doubling_estimate, freeness_via_cover, greedy_net, net_embed};
use rough_angle::sra::{
    critical_alpha, euclidean_angle_audit, max_sra_subset_with, sra_free_order, SearchOptions, SraReport,
    DEFAULT_NODE_BUDGET,
};
use rough_angle::{FiniteMetricSpace, ModelSpace, SampledCurve};

/// Version of the JSON report layout.
pub const SCHEMA_VERSION: &str = "1.0.0";

/// Environment variable that sizes the worker pool.
pub const THREADS_ENV: &str = "ROUGH_ANGLE_THREADS";

/// Default number of random trials for `refute-weird`.
pub const DEFAULT_TRIALS: u64 = 100_000;

pub fn report_schema_version() -> &'static str {
    SCHEMA_VERSION
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileArg {
    Identity,
    Log1p,
    Saturating,
}

impl From<ProfileArg> for Profile {
    fn from(p: ProfileArg) -> Self {
        match p {
            ProfileArg::Identity => Profile::Identity,
            ProfileArg::Log1p => Profile::Log1p,
            ProfileArg::Saturating => Profile::Saturating,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Check the metric axioms of a distance matrix.
    Validate,
    /// Decide SRA(α) and report violations, critical α and a maximum SRA(α) subset.
    SraCheck,
    /// Least α for which the space satisfies SRA(α).
    CriticalAlpha,
    /// Maximum SRA(α) subset by branch and bound.
    MaxSra,
    /// Raise every distance to the power β.
    Snowflake,
    /// Check the DSE order, the two-point lemma and the L/D statistics.
    DseCheck,
    /// Generate a DSE space: the snowflaked path with --beta, otherwise a random sample.
    GenDse,
    /// Gradient-descent trajectory of a seeded random quadratic.
    GenCurve,
    /// Check that a sampled curve is self-contracted.
    CurveCheck,
    /// Reverse a self-contracted curve into a DSE space.
    CurveToDse,
    /// Evaluate the constants of the extraction argument.
    Constants,
    /// Extract a k-point SRA(α) subspace from a DSE space.
    Extract,
    /// Search for small spaces meeting both conditions of the two-condition lemma.
    RefuteWeird,
    /// Distance-to-net embedding into sup-norm coordinates.
    NetEmbed,
    /// Greedy estimate of the doubling constant at given scales.
    Doubling,
    /// Check the pigeonhole bound through r-ball covers of R-balls.
    FreenessCover,
    /// Compare wide vertex angles with SRA(α) violations in a Euclidean cloud.
    Angles,
}

impl Command {
    pub fn name(self) -> String {
        serde_json::to_value(self).ok().and_then(|v| v.as_str().map(str::to_owned)).unwrap_or_default()
    }
}

/// One experiment: a subcommand and its parameters.
#[derive(Clone, Debug, Parser)]
#[command(name = "rough-angle", version, about = "Rough-angle experiments on finite metric spaces")]
pub struct ExperimentConfig {
    #[command(subcommand)]
    pub command: Command,
    #[arg(long, global = true)]
    pub alpha: Option<f64>,
    #[arg(long, global = true)]
    pub theta: Option<f64>,
    #[arg(long, global = true)]
    pub beta: Option<f64>,
    #[arg(long, global = true)]
    pub k: Option<u64>,
    #[arg(long, global = true)]
    pub n: Option<usize>,
    #[arg(long, global = true)]
    pub m: Option<u64>,
    #[arg(long, global = true)]
    pub r: Option<f64>,
    #[arg(long = "R", global = true)]
    pub big_r: Option<f64>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Search-node budget, or the number of random trials for refute-weird.
    #[arg(long, global = true)]
    pub budget: Option<u64>,
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Input file; `-` reads standard input, which is also used when it is piped.
    #[arg(long = "in", global = true)]
    pub input: Option<PathBuf>,
    /// Output file; standard output when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    #[arg(long, global = true)]
    pub model: Option<String>,
    #[arg(long, global = true)]
    pub dim: Option<usize>,
    #[arg(long, global = true)]
    pub step: Option<f64>,
    #[arg(long, global = true)]
    pub steps: Option<usize>,
    #[arg(long, global = true, value_delimiter = ',')]
    pub scales: Vec<f64>,
    #[arg(long, global = true)]
    pub lambda: Option<u64>,
    #[arg(long, global = true, value_enum)]
    pub profile: Option<ProfileArg>,
}

/// Whether the analysis came out positive.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Holds,
    /// The property was violated or the searched object is absent.
    Negative,
}

impl Verdict {
    fn from_bool(ok: bool) -> Self {
        if ok {
            Self::Holds
        } else {
            Self::Negative
        }
    }

    pub fn exit_code(self) -> i32 {
        match self {
            Self::Holds => 0,
            Self::Negative => 2,
        }
    }
}

/// Exit code for failures: bad arguments, unreadable input, range errors.
pub const EXIT_ERROR: i32 = 1;

#[derive(Clone, Debug)]
pub struct Outcome {
    pub verdict: Verdict,
    /// Command-specific fields; the envelope keys are added by [`envelope`].
    pub body: Value,
    /// Plot-ready table for `--format csv`, where the command has one.
    pub csv: Option<String>,
}

fn outcome(verdict: Verdict, body: impl Serialize) -> Result<Outcome> {
    Ok(Outcome { verdict, body: serde_json::to_value(body)?, csv: None })
}

fn need<T: Copy>(v: Option<T>, field: &str, cfg: &ExperimentConfig) -> Result<T> {
    v.ok_or_else(|| anyhow!("field `{field}`: required by {}", cfg.command.name()))
}

fn model_of(cfg: &ExperimentConfig) -> Result<ModelSpace> {
    let kind = ModelKind::parse(cfg.model.as_deref().unwrap_or("euclidean")).context("field `model`")?;
    let dim = cfg.dim.unwrap_or(2);
    ModelSpace::new(kind, dim).context("field `dim`")
}

/// Reads `--in`, or standard input when it is `-` or absent and piped.
fn read_input(cfg: &ExperimentConfig, stdin: &mut dyn Read, stdin_piped: bool) -> Result<String> {
    let mut text = String::new();
    match cfg.input.as_deref() {
        Some(p) if p.as_os_str() != "-" => {
            text = std::fs::read_to_string(p).with_context(|| format!("field `in`: cannot read {}", p.display()))?
        }
        Some(_) => {
            stdin.read_to_string(&mut text).context("field `in`: cannot read standard input")?;
        }
        None if stdin_piped => {
            stdin.read_to_string(&mut text).context("field `in`: cannot read standard input")?;
        }
        None => bail!("field `in`: required by {}", cfg.command.name()),
    }
    Ok(text)
}

/// Distance matrix from a matrix file, a point cloud (`coords`) or a curve (`points`).
fn load_space(text: &str) -> Result<FiniteMetricSpace> {
    if text.trim_start().starts_with('{') {
        let v: Value = serde_json::from_str(text).context("field `in`")?;
        if v.get("coords").is_some() {
            return Ok(from_point_cloud(&parse_point_cloud(text)?)?);
        }
        if v.get("points").is_some() {
            return Ok(parse_curve(text)?.distance_matrix());
        }
    }
    Ok(parse_metric(text)?)
}

fn matrix_csv(m: &FiniteMetricSpace) -> Result<String> {
    let mut buf = Vec::new();
    write_matrix_csv(m, &mut buf)?;
    Ok(String::from_utf8(buf)?)
}

fn curve_csv(c: &SampledCurve) -> String {
    let arity = c.points().first().map_or(0, Vec::len);
    let mut s = std::iter::once("t".to_string()).chain((0..arity).map(|i| format!("x{i}"))).collect::<Vec<_>>().join(",");
    s.push('\n');
    for (t, p) in c.times().iter().zip(c.points()) {
        let row: Vec<String> = std::iter::once(t.to_string()).chain(p.iter().map(f64::to_string)).collect();
        s.push_str(&row.join(","));
        s.push('\n');
    }
    s
}

fn dse_body(d: &DseSpace) -> Result<Value> {
    let mut v = serde_json::to_value(MatrixFile::of_dse(d))?;
    let (l, gap) = (length_l(d), gap_d(d));
    v["length_l"] = json!(l);
    v["gap_d"] = json!(gap);
    v["ratio_l_over_d"] = json!(if gap > 0.0 { l / gap } else { 0.0 });
    Ok(v)
}

/// Runs one experiment. `stdin_piped` tells whether a missing `--in` falls back to stdin.
pub fn run(cfg: &ExperimentConfig, stdin: &mut dyn Read, stdin_piped: bool) -> Result<Outcome> {
    let budget = cfg.budget.unwrap_or(DEFAULT_NODE_BUDGET);
    let mut input = || read_input(cfg, stdin, stdin_piped);
    match cfg.command {
        Command::Validate => {
            let m = load_space(&input()?)?;
            let tol = cfg.tol.unwrap_or_else(|| m.default_tol());
            let report = validate_metric(&m, tol);
            outcome(Verdict::from_bool(report.passed), json!({ "n": m.len(), "tol": tol, "validation": report }))
        }
        Command::SraCheck => {
            let m = load_space(&input()?)?;
            let alpha = need(cfg.alpha, "alpha", cfg)?;
            let tol = cfg.tol.unwrap_or_else(|| m.default_tol());
            let report = SraReport::build(&m, alpha, tol, budget)?;
            outcome(Verdict::from_bool(report.is_sra), report)
        }
        Command::CriticalAlpha => {
            let m = load_space(&input()?)?;
            outcome(Verdict::Holds, json!({ "n": m.len(), "critical_alpha": critical_alpha(&m) }))
        }
        Command::MaxSra => {
            let m = load_space(&input()?)?;
            let alpha = need(cfg.alpha, "alpha", cfg)?;
            let tol = cfg.tol.unwrap_or_else(|| m.default_tol());
            let cert = max_sra_subset_with(&m, alpha, SearchOptions { tol: Some(tol), budget })?;
            let order = sra_free_order(&m, alpha, budget)?;
            outcome(Verdict::Holds, json!({ "n": m.len(), "tol": tol, "budget": budget, "certificate": cert, "free_order": order }))
        }
        Command::Snowflake => {
            let m = load_space(&input()?)?;
            let beta = need(cfg.beta, "beta", cfg)?;
            let s = m.snowflake(beta).context("field `beta`")?;
            let mut o = outcome(Verdict::Holds, MatrixFile::of_metric(&s))?;
            o.csv = Some(matrix_csv(&s)?);
            Ok(o)
        }
        Command::DseCheck => {
            let m = parse_metric(&input()?)?;
            let tol = cfg.tol.unwrap_or_else(|| m.default_tol());
            let verdict = is_dse(&m, tol);
            if !verdict.is_dse {
                return outcome(Verdict::Negative, json!({ "n": m.len(), "dse": verdict }));
            }
            let d = DseSpace::new(m, tol)?;
            let lemma = check_two_lemma(&d);
            let (l, gap) = (length_l(&d), gap_d(&d));
            outcome(
                Verdict::from_bool(lemma.passed),
                json!({
                    "n": d.len(),
                    "dse": verdict,
                    "two_lemma": lemma,
                    "length_l": l,
                    "gap_d": gap,
                    "ratio_l_over_d": if gap > 0.0 { l / gap } else { 0.0 },
                }),
            )
        }
        Command::GenDse => {
            let n = need(cfg.n, "n", cfg)?;
            let d = match cfg.beta {
                Some(beta) => gen_snowflaked_path(n, beta)?,
                None => gen_random_dse(n, need(cfg.seed, "seed", cfg)?, model_of(cfg)?)?,
            };
            Ok(Outcome { verdict: Verdict::Holds, body: dse_body(&d)?, csv: Some(matrix_csv(d.base())?) })
        }
        Command::GenCurve => {
            let seed = need(cfg.seed, "seed", cfg)?;
            let model = model_of(cfg)?;
            let spec = random_quadratic(model.dim(), seed);
            let step = match cfg.step {
                Some(h) => h,
                None => 0.5 / spec.max_eigenvalue()?,
            };
            let steps = cfg.steps.unwrap_or(40);
            let profile = cfg.profile.unwrap_or(ProfileArg::Identity);
            let c = gen_quasiconvex_trajectory(&spec, profile.into(), step, steps, model)?;
            let mut body = serde_json::to_value(CurveFile::of_curve(&c))?;
            body["quadratic"] = serde_json::to_value(&spec)?;
            body["step"] = json!(step);
            body["profile"] = serde_json::to_value(profile)?;
            Ok(Outcome { verdict: Verdict::Holds, body, csv: Some(curve_csv(&c)) })
        }
        Command::CurveCheck => {
            let c = parse_curve(&input()?)?;
            let tol = cfg.tol.unwrap_or_else(|| c.default_tol());
            let verdict = is_self_contracted(&c, tol);
            outcome(
                Verdict::from_bool(verdict.is_self_contracted),
                json!({ "n": c.len(), "length": curve_length(&c), "diameter": curve_diameter(&c), "contraction": verdict }),
            )
        }
        Command::CurveToDse => {
            let c = parse_curve(&input()?)?;
            let tol = cfg.tol.unwrap_or_else(|| c.default_tol());
            match curve_to_dse_with_tol(&c, tol) {
                Ok(d) => Ok(Outcome { verdict: Verdict::Holds, body: dse_body(&d)?, csv: Some(matrix_csv(d.base())?) }),
                Err(CurveError::NotSelfContracted { .. }) => {
                    outcome(Verdict::Negative, json!({ "contraction": is_self_contracted(&c, tol) }))
                }
                Err(e) => Err(e.into()),
            }
        }
        Command::Constants => {
            let bundle = ConstantsBundle::build(cfg.alpha, cfg.theta, cfg.k, cfg.m)?;
            let mut body = serde_json::to_value(&bundle)?;
            if let (Some(k), Some(lambda), Some(r), Some(big_r)) = (cfg.k, cfg.lambda, cfg.r, cfg.big_r) {
                body["globq_bound"] = json!(globq_bound(k, lambda, big_r, r)?.to_string());
            }
            outcome(Verdict::Holds, body)
        }
        Command::Extract => {
            let d = parse_dse(&input()?)?;
            let alpha = need(cfg.alpha, "alpha", cfg)?;
            let k = cfg.k.unwrap_or(4) as usize;
            let opts = ExtractOptions {
                theta: cfg.theta,
                m: cfg.m.map(|m| m as usize),
                budget: cfg.budget.unwrap_or(DEFAULT_SEARCH_BUDGET),
            };
            let report = extract_sra_subspace(&d, alpha, k, opts)?;
            let bundle = ConstantsBundle::build(Some(alpha), Some(report.theta), Some(k as u64), None)?;
            let ok = matches!(report.result, Extraction::Certificate { .. });
            outcome(Verdict::from_bool(ok), json!({ "extraction": report, "constants": bundle }))
        }
        Command::RefuteWeird => {
            let theta = need(cfg.theta, "theta", cfg)?;
            let alpha = need(cfg.alpha, "alpha", cfg)?;
            let seed = need(cfg.seed, "seed", cfg)?;
            let n = match cfg.n {
                Some(n) => n,
                None => rough_angle::constants::n_of_theta_alpha(theta, alpha)? as usize,
            };
            let report = refute_weird_angles(theta, alpha, n, cfg.budget.unwrap_or(DEFAULT_TRIALS), seed)?;
            let bundle = ConstantsBundle::build(Some(alpha), Some(theta), None, None)?;
            let ok = report.status != RefutationStatus::Feasible;
            outcome(Verdict::from_bool(ok), json!({ "refutation": report, "constants": bundle }))
        }
        Command::NetEmbed => {
            let m = load_space(&input()?)?;
            let r = need(cfg.r, "r", cfg)?;
            let all: Vec<usize> = (0..m.len()).collect();
            let net = greedy_net(&m, r, &all)?;
            let e = net_embed(&m, &net)?;
            let mut buf = Vec::new();
            write_embedding_csv(&e, &mut buf)?;
            let body = json!({ "r": r, "gamma": e.gamma, "upper": e.upper, "net_size": e.net_size(), "net": e.net });
            Ok(Outcome { verdict: Verdict::Holds, body, csv: Some(String::from_utf8(buf)?) })
        }
        Command::Doubling => {
            let m = load_space(&input()?)?;
            if cfg.scales.is_empty() {
                bail!("field `scales`: required by doubling");
            }
            let est = doubling_estimate(&m, &cfg.scales)?;
            let mut csv = String::from("scale,lambda,center\n");
            for row in &est.rows {
                csv.push_str(&format!("{},{},{}\n", row.scale, row.lambda, row.center));
            }
            let mut o = outcome(Verdict::Holds, &est)?;
            o.csv = Some(csv);
            Ok(o)
        }
        Command::FreenessCover => {
            let m = load_space(&input()?)?;
            let alpha = need(cfg.alpha, "alpha", cfg)?;
            let r = need(cfg.r, "r", cfg)?;
            let big_r = need(cfg.big_r, "R", cfg)?;
            let k = cfg.k.unwrap_or(3);
            let report = freeness_via_cover(&m, alpha, r, big_r, k, budget)?;
            outcome(Verdict::from_bool(report.holds != Some(false)), report)
        }
        Command::Angles => {
            let pc = parse_point_cloud(&input()?)?;
            let alpha = need(cfg.alpha, "alpha", cfg)?;
            let audit = euclidean_angle_audit(&pc, alpha)?;
            let agree = audit.sets_agree();
            let mut body = serde_json::to_value(&audit)?;
            body["sets_agree"] = json!(agree);
            outcome(Verdict::from_bool(agree), body)
        }
    }
}

/// Parameters exactly as resolved from the command line.
fn params(cfg: &ExperimentConfig) -> Value {
    let mut p = Map::new();
    let mut put = |k: &str, v: Value| {
        if !v.is_null() {
            p.insert(k.into(), v);
        }
    };
    put("alpha", json!(cfg.alpha));
    put("theta", json!(cfg.theta));
    put("beta", json!(cfg.beta));
    put("k", json!(cfg.k));
    put("n", json!(cfg.n));
    put("m", json!(cfg.m));
    put("r", json!(cfg.r));
    put("R", json!(cfg.big_r));
    put("seed", json!(cfg.seed));
    put("budget", json!(cfg.budget));
    put("tol", json!(cfg.tol));
    put("model", json!(cfg.model));
    put("dim", json!(cfg.dim));
    put("step", json!(cfg.step));
    put("steps", json!(cfg.steps));
    put("lambda", json!(cfg.lambda));
    put("profile", json!(cfg.profile));
    if !cfg.scales.is_empty() {
        put("scales", json!(cfg.scales));
    }
    Value::Object(p)
}

/// The command's body plus `schema_version`, `command`, `generated_at` and `params`.
pub fn envelope(cfg: &ExperimentConfig, body: Value, generated_at: &str) -> Value {
    let mut doc = match body {
        Value::Object(map) => map,
        other => Map::from_iter([("result".to_string(), other)]),
    };
    doc.insert("schema_version".into(), json!(SCHEMA_VERSION));
    doc.insert("command".into(), json!(cfg.command.name()));
    doc.insert("generated_at".into(), json!(generated_at));
    doc.insert("params".into(), params(cfg));
    Value::Object(doc)
}

fn now() -> String {
    humantime::format_rfc3339_seconds(std::time::SystemTime::now()).to_string()
}

/// Sizes the global rayon pool from [`THREADS_ENV`], if set.
pub fn configure_threads() -> Result<()> {
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v.trim().parse().with_context(|| format!("{THREADS_ENV}={v:?} is not a thread count"))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .with_context(|| format!("cannot size the thread pool from {THREADS_ENV}"))?;
    }
    Ok(())
}

/// Runs the experiment and writes its output; returns the process exit code.
pub fn execute(cfg: &ExperimentConfig, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32 {
    let stdin = std::io::stdin();
    let piped = !stdin.is_terminal();
    let result = run(cfg, &mut stdin.lock(), piped).and_then(|o| {
        let text = match cfg.format {
            Format::Json => {
                let mut s = serde_json::to_string_pretty(&envelope(cfg, o.body, &now()))?;
                s.push('\n');
                s
            }
            Format::Csv => o.csv.ok_or_else(|| anyhow!("field `format`: csv is not available for {}", cfg.command.name()))?,
        };
        match &cfg.out {
            Some(path) => std::fs::write(path, text).with_context(|| format!("field `out`: cannot write {}", path.display()))?,
            None => stdout.write_all(text.as_bytes())?,
        }
        Ok(o.verdict)
    });
    match result {
        Ok(v) => v.exit_code(),
        Err(e) => {
            let _ = writeln!(stderr, "error: {e:#}");
            EXIT_ERROR
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(args: &[&str]) -> ExperimentConfig {
        ExperimentConfig::try_parse_from(std::iter::once("rough-angle").chain(args.iter().copied())).unwrap()
    }

    fn run_on(args: &[&str], input: &str) -> Outcome {
        run(&cfg(args), &mut input.as_bytes(), true).unwrap()
    }

    #[test]
    fn command_names_are_kebab_case() {
        assert_eq!(Command::SraCheck.name(), "sra-check");
        assert_eq!(Command::FreenessCover.name(), "freeness-cover");
        assert_eq!(report_schema_version(), "1.0.0");
    }

    #[test]
    fn capital_r_is_its_own_flag() {
        let c = cfg(&["freeness-cover", "--r", "1", "--R", "4"]);
        assert_eq!((c.r, c.big_r), (Some(1.0), Some(4.0)));
    }

    #[test]
    fn max_sra_on_collinear_points() {
        let o = run_on(&["max-sra", "--alpha", "0.9"], "0,1,2,3,4,5\n1,0,1,2,3,4\n2,1,0,1,2,3\n3,2,1,0,1,2\n4,3,2,1,0,1\n5,4,3,2,1,0\n");
        assert_eq!(o.verdict, Verdict::Holds);
        assert_eq!(o.body["certificate"]["size"], 2);
        assert_eq!(o.body["certificate"]["optimal"], true);
    }

    #[test]
    fn constants_report_c_of_three() {
        let o = run_on(&["constants", "--m", "3", "--theta", "0.5"], "");
        assert_eq!(o.body["c_m_theta"]["decimal"], "78");
    }

    #[test]
    fn missing_parameters_name_the_field() {
        let e = run(&cfg(&["sra-check"]), &mut "0,1\n1,0\n".as_bytes(), true).unwrap_err();
        assert!(e.to_string().contains("`alpha`"), "{e}");
        let e = run(&cfg(&["critical-alpha"]), &mut "".as_bytes(), false).unwrap_err();
        assert!(e.to_string().contains("`in`"), "{e}");
        let e = run(&cfg(&["gen-curve"]), &mut "".as_bytes(), false).unwrap_err();
        assert!(e.to_string().contains("`seed`"), "{e}");
    }

    #[test]
    fn envelope_keeps_body_and_adds_metadata() {
        let c = cfg(&["critical-alpha", "--alpha", "0.5"]);
        let doc = envelope(&c, json!({ "critical_alpha": 0.25 }), "T");
        assert_eq!(doc["critical_alpha"], 0.25);
        assert_eq!(doc["schema_version"], SCHEMA_VERSION);
        assert_eq!(doc["command"], "critical-alpha");
        assert_eq!(doc["params"], json!({ "alpha": 0.5 }));
    }
}
