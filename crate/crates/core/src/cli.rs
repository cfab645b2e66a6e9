//! Batch command line front end.
//!
//! Three commands, all file-oriented and deterministic:
//!
//! * `suite run` — run verification suites and write one JSON report per
//!   suite plus a `summary.json`. A report file is the object
//!   `{"config": <snapshot>, "report": <suite report>}` where the snapshot
//!   is the fully merged run configuration (config file overlaid by flags)
//!   minus the output directory, so that reruns with the same configuration
//!   produce byte-identical files except for the report's `wall_time`.
//! * `lambda` — dump the antisymmetric cotangent-delta distribution on the
//!   `p`-torus, either as its permutation-sum term table (JSON, exact term
//!   data) or as a Fourier-coefficient CSV over a requested index box
//!   (full-precision scientific notation, 17 significant digits).
//! * `theta` — apply the chart-weighted kernel to user data supplied as a
//!   JSON map `chart index -> exponential-polynomial`, print the paired
//!   value on stdout as `[re, im]`, and write a per-chart weight/pairing
//!   audit file.
//!
//! Exit codes are a stable contract for CI: `0` all suites passed (or the
//! requested dump/application succeeded), `1` at least one suite ran to
//! completion but failed its criteria, `2` usage or configuration error
//! (nothing is written), `3` internal numeric failure.
//!
//! Configuration file: a single flat JSON document whose keys mirror the
//! long flags (`{"name": "id1", "m_max": 64, "lambda_max": 40.0, ...}`).
//! Flags override file values field by field. Unknown keys are rejected.
//!
//! The default output directory is `reports`, overridable by the
//! `PPROJ_OUT_DIR` environment variable and by `--out` (in increasing
//! precedence).

use std::collections::BTreeMap;
use std::env;
use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use itertools::Itertools;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::distributions::{fourier_coefficient, pair};
use crate::kernels::ExpPoly;
use crate::projectors::{
    apply_theta, build_lambda, build_lambda_sigma_form, build_theta, Regularization, ThetaKernel,
};
use crate::util::rat_to_f64;
use crate::verification::{self, Report, VerifyError};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_SUITE_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

/// Environment variable holding the default output directory.
pub const OUT_DIR_ENV: &str = "PPROJ_OUT_DIR";

/// Suite names accepted by `suite run --name`.
pub const SUITE_NAMES: [&str; 9] = [
    "matchings",
    "pairing",
    "theorem2",
    "id1",
    "id2",
    "swap",
    "summation",
    "eigen",
    "all",
];

/// The summation shapes exercised by `--name all` (the full supported set).
const ALL_SUMMATION_SHAPES: [(usize, usize, usize); 4] =
    [(2, 1, 0), (2, 1, 1), (3, 1, 0), (3, 1, 1)];

// ---------------------------------------------------------------------------
// Errors and exit codes
// ---------------------------------------------------------------------------

/// Failure of a front-end operation, split by who is at fault. `Usage`
/// covers bad flags, bad config files, unknown suites, unwritable paths
/// and malformed data files (nothing has been written when it is raised);
/// `Numeric` covers computations that should have succeeded but did not.
/// The split is the exit-code contract and is reused by the C ABI layer.
#[derive(Debug)]
pub enum RunError {
    Usage(String),
    Numeric(String),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Usage(_) => EXIT_USAGE,
            RunError::Numeric(_) => EXIT_NUMERIC,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            RunError::Usage(m) | RunError::Numeric(m) => m,
        }
    }
}

impl From<VerifyError> for RunError {
    fn from(e: VerifyError) -> Self {
        match e {
            // Parameter-envelope violations are configuration errors; the
            // rest indicate a numeric computation gave up.
            VerifyError::CostGuard(_) | VerifyError::BadInput(_) => RunError::Usage(e.to_string()),
            other => RunError::Numeric(other.to_string()),
        }
    }
}

fn io_err(context: &str, path: &Path, e: std::io::Error) -> RunError {
    RunError::Usage(format!("{context} {}: {e}", path.display()))
}

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

/// Regularization choice for the Fourier-side partial sums.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RegChoice {
    /// Geometric damping with extrapolation inside the suite (default).
    Abel,
    /// Triangular averaging; kept for comparison, converges too slowly for
    /// the correspondence suite's tolerance.
    Cesaro,
    /// No damping.
    Sharp,
}

impl RegChoice {
    fn to_regularization(self) -> Regularization {
        match self {
            RegChoice::Abel => Regularization::Abel { q: 0.999 },
            RegChoice::Cesaro => Regularization::Cesaro,
            RegChoice::Sharp => Regularization::Sharp,
        }
    }
}

/// Flat run configuration: the merge of config-file keys and command line
/// flags (flags win). Every field is optional; suites fill in their
/// reference defaults for whatever stays unset. The resolved snapshot is
/// embedded in every report for reproducibility.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c_max: Option<i64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m_max: Option<i64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda_max: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a_bound: Option<i64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reg: Option<RegChoice>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<String>,
}

impl RunConfig {
    /// Overlays `self` with `flags`: any field set in `flags` wins.
    fn overlaid_by(mut self, flags: RunConfig) -> RunConfig {
        macro_rules! take {
            ($($field:ident),*) => {
                $(if flags.$field.is_some() { self.$field = flags.$field; })*
            };
        }
        take!(name, p, n, r, k, c_max, m_max, lambda_max, a_bound, reg, tol, workers, seed, out);
        self
    }

    fn validate(&self) -> Result<(), RunError> {
        let bad = |msg: String| Err(RunError::Usage(msg));
        if let Some(name) = &self.name {
            if !SUITE_NAMES.contains(&name.as_str()) {
                return bad(format!(
                    "unknown suite name '{name}' (expected one of {})",
                    SUITE_NAMES.join(", ")
                ));
            }
        }
        if let Some(t) = self.tol {
            if !(t > 0.0 && t < 1.0) {
                return bad(format!("tolerance must lie in (0, 1), got {t}"));
            }
        }
        if self.p == Some(0) {
            return bad("p must be positive for suite runs".into());
        }
        if self.n == Some(0) {
            return bad("n must be positive".into());
        }
        if let Some(c) = self.c_max {
            if c < 1 {
                return bad(format!("c_max must be at least 1, got {c}"));
            }
        }
        if let Some(m) = self.m_max {
            if m < 1 {
                return bad(format!("m_max must be at least 1, got {m}"));
            }
        }
        if let Some(l) = self.lambda_max {
            if !l.is_finite() || l <= 0.0 {
                return bad(format!("lambda_max must be positive, got {l}"));
            }
        }
        if let Some(a) = self.a_bound {
            if a < 1 {
                return bad(format!("a_bound must be at least 1, got {a}"));
            }
        }
        if let Some(w) = self.workers {
            if w > 1024 {
                return bad(format!("workers capped at 1024, got {w}"));
            }
        }
        Ok(())
    }
}

fn load_config_file(path: &Path) -> Result<RunConfig, RunError> {
    let text = fs::read_to_string(path).map_err(|e| io_err("cannot read config file", path, e))?;
    serde_json::from_str(&text)
        .map_err(|e| RunError::Usage(format!("config file {}: {e}", path.display())))
}

/// Output directory resolution: `--out` flag, then config file, then the
/// `PPROJ_OUT_DIR` environment variable, then `reports`.
fn resolve_out_dir(cfg_out: &Option<String>) -> PathBuf {
    match cfg_out {
        Some(dir) => PathBuf::from(dir),
        None => env::var_os(OUT_DIR_ENV)
            .map(PathBuf::from)
            .unwrap_or_else(|| PathBuf::from("reports")),
    }
}

fn write_json_file(path: &Path, value: &Value) -> Result<(), RunError> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| RunError::Numeric(format!("serialization failed: {e}")))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| io_err("cannot write", path, e))
}

/// Installs the requested rayon pool size. Only the first installation in a
/// process takes effect; suite results do not depend on the worker count
/// (each suite reduces in a fixed order), so a repeat call is harmless.
fn init_workers(workers: usize) {
    if workers > 0 {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build_global();
    }
}

// ---------------------------------------------------------------------------
// Command line surface
// ---------------------------------------------------------------------------

#[derive(Debug, Parser)]
#[command(
    name = "pproj",
    version,
    about = "Projector kernel toolbox: verification suites, torus distribution dumps, kernel application"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run verification suites and write JSON reports.
    Suite {
        #[command(subcommand)]
        action: SuiteAction,
    },
    /// Dump the antisymmetric cotangent-delta distribution on the p-torus.
    Lambda(LambdaArgs),
    /// Apply the chart-weighted kernel to data from a JSON file.
    Theta(ThetaArgs),
}

#[derive(Debug, Subcommand)]
enum SuiteAction {
    /// Run one suite (or `--name all` for the reference portfolio).
    Run(SuiteArgs),
}

#[derive(Debug, Args)]
struct SuiteArgs {
    /// Suite to run: matchings, pairing, theorem2, id1, id2, swap,
    /// summation, eigen, or all. `all` runs every suite at its reference
    /// parameters (shape and bound flags are ignored; seed, tolerance,
    /// regularization and output flags still apply).
    #[arg(long)]
    name: Option<String>,
    /// Maximum matching size / correspondence order, suite dependent.
    #[arg(long, visible_alias = "p-max")]
    p: Option<usize>,
    /// Rank (swap, eigen, summation).
    #[arg(long, visible_alias = "n-max")]
    n: Option<usize>,
    /// Projector index (summation).
    #[arg(long)]
    r: Option<usize>,
    /// Chart index (summation).
    #[arg(long)]
    k: Option<usize>,
    /// Circle frequency bound for sampled signatures.
    #[arg(long = "c-max")]
    c_max: Option<i64>,
    /// Summation cutoff over circle modes / envelope count bound.
    #[arg(long = "m-max")]
    m_max: Option<i64>,
    /// Spectral quadrature cutoff.
    #[arg(long = "lambda-max")]
    lambda_max: Option<f64>,
    /// Fourier index box bound for the correspondence suite.
    #[arg(long = "a-bound")]
    a_bound: Option<i64>,
    /// Partial-sum regularization.
    #[arg(long, value_enum)]
    reg: Option<RegChoice>,
    /// Pass tolerance override applied to the fitted spreads.
    #[arg(long)]
    tol: Option<f64>,
    /// Worker threads for suite-level parallelism (0 = library default).
    #[arg(long)]
    workers: Option<usize>,
    /// RNG seed recorded in every report.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (default: $PPROJ_OUT_DIR, then `reports`).
    #[arg(long)]
    out: Option<String>,
    /// Flat JSON config file; flags override its keys.
    #[arg(long)]
    config: Option<PathBuf>,
}

impl SuiteArgs {
    fn as_config(&self) -> RunConfig {
        RunConfig {
            name: self.name.clone(),
            p: self.p,
            n: self.n,
            r: self.r,
            k: self.k,
            c_max: self.c_max,
            m_max: self.m_max,
            lambda_max: self.lambda_max,
            a_bound: self.a_bound,
            reg: self.reg,
            tol: self.tol,
            workers: self.workers,
            seed: self.seed,
            out: self.out.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum LambdaMode {
    /// JSON term table of the permutation-sum form (exact term data).
    Terms,
    /// CSV of Fourier coefficients over the index box `|a_j| <= a_bound`.
    Fourier,
}

#[derive(Debug, Args)]
struct LambdaArgs {
    /// Number of torus coordinates.
    #[arg(long)]
    p: usize,
    #[arg(long, value_enum, default_value = "terms")]
    mode: LambdaMode,
    /// Index box bound for fourier mode.
    #[arg(long = "a-bound", default_value_t = 3)]
    a_bound: i64,
    /// Output directory (default: $PPROJ_OUT_DIR, then `reports`).
    #[arg(long)]
    out: Option<String>,
}

#[derive(Debug, Args)]
struct ThetaArgs {
    /// Rank of the kernel.
    #[arg(long)]
    n: usize,
    /// Projector index.
    #[arg(long)]
    r: usize,
    /// JSON data file: object mapping chart index to an
    /// exponential-polynomial in the chart's coordinates.
    #[arg(long)]
    data: PathBuf,
    /// Output directory for the audit file.
    #[arg(long)]
    out: Option<String>,
}

// ---------------------------------------------------------------------------
// Entry point
// ---------------------------------------------------------------------------

/// Parses `args` (including the program name) and runs the selected
/// command, returning the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version requests print to stdout and exit 0; real
            // parse errors go to stderr with the usage exit code.
            let code = if e.use_stderr() {
                EXIT_USAGE
            } else {
                EXIT_PASS
            };
            let _ = e.print();
            return code;
        }
    };
    let outcome = match cli.command {
        Command::Suite {
            action: SuiteAction::Run(args),
        } => cmd_suite(&args),
        Command::Lambda(args) => cmd_lambda(&args),
        Command::Theta(args) => cmd_theta(&args),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {}", e.message());
            e.exit_code()
        }
    }
}

// ---------------------------------------------------------------------------
// suite run
// ---------------------------------------------------------------------------

type SuiteJob = (
    String,
    Box<dyn Fn() -> Result<Report, VerifyError> + Send + Sync>,
);

/// Builds the ordered job list for the requested suite name. For `all`,
/// shape and bound flags are ignored and the reference portfolio is run;
/// for a single suite the flags are honored and unset knobs fall back to
/// the suite's reference values.
fn suite_jobs(cfg: &RunConfig, name: &str, seed: u64) -> Result<Vec<SuiteJob>, RunError> {
    let portfolio = name == "all";
    let reg = cfg.reg.unwrap_or(RegChoice::Abel).to_regularization();
    let names: Vec<&str> = if portfolio {
        SUITE_NAMES[..SUITE_NAMES.len() - 1].to_vec()
    } else {
        vec![name]
    };
    let mut jobs: Vec<SuiteJob> = Vec::new();
    for nm in names {
        match nm {
            "matchings" => {
                let p = if portfolio { 10 } else { cfg.p.unwrap_or(10) };
                jobs.push((
                    "matchings".into(),
                    Box::new(move || verification::verify_matchings(p)),
                ));
            }
            "pairing" => {
                let m = if portfolio {
                    3
                } else {
                    cfg.m_max.map(|v| v as usize).unwrap_or(3)
                };
                jobs.push((
                    "pairing".into(),
                    Box::new(move || verification::verify_pairing_lemma(m, 12, seed)),
                ));
            }
            "theorem2" => {
                if portfolio {
                    for p in 1..=3 {
                        jobs.push((
                            format!("theorem2_p{p}"),
                            Box::new(move || {
                                verification::verify_theorem2(
                                    p,
                                    200,
                                    Regularization::Abel { q: 0.999 },
                                )
                            }),
                        ));
                    }
                } else {
                    let p = cfg.p.unwrap_or(2);
                    let a_bound = cfg.a_bound.unwrap_or(200);
                    jobs.push((
                        "theorem2".into(),
                        Box::new(move || verification::verify_theorem2(p, a_bound, reg)),
                    ));
                }
            }
            "id1" => {
                let (m, l) = if portfolio {
                    (64, 40.0)
                } else {
                    (cfg.m_max.unwrap_or(64), cfg.lambda_max.unwrap_or(40.0))
                };
                jobs.push((
                    "id1".into(),
                    Box::new(move || verification::verify_id1(m, l, 6, seed)),
                ));
            }
            "id2" => {
                let (m, l) = if portfolio {
                    (64, 40.0)
                } else {
                    (cfg.m_max.unwrap_or(64), cfg.lambda_max.unwrap_or(40.0))
                };
                jobs.push((
                    "id2".into(),
                    Box::new(move || verification::verify_id2(m, l, 7, seed)),
                ));
            }
            "swap" => {
                let n = if portfolio { 4 } else { cfg.n.unwrap_or(4) };
                jobs.push((
                    "swap".into(),
                    Box::new(move || verification::verify_swap(n, 100, seed)),
                ));
            }
            "summation" => {
                if portfolio {
                    for (n, r, k) in ALL_SUMMATION_SHAPES {
                        jobs.push((
                            format!("summation_{n}_{r}_{k}"),
                            Box::new(move || {
                                verification::verify_summation(n, r, k, 8, 16, 40.0, 6, seed)
                            }),
                        ));
                    }
                } else {
                    let (n, r, k) = (cfg.n.unwrap_or(2), cfg.r.unwrap_or(1), cfg.k.unwrap_or(0));
                    let c_max = cfg.c_max.unwrap_or(8);
                    let m = cfg.m_max.unwrap_or(16);
                    let l = cfg.lambda_max.unwrap_or(40.0);
                    jobs.push((
                        "summation".into(),
                        Box::new(move || {
                            verification::verify_summation(n, r, k, c_max, m, l, 6, seed)
                        }),
                    ));
                }
            }
            "eigen" => {
                let n = if portfolio { 3 } else { cfg.n.unwrap_or(3) };
                jobs.push((
                    "eigen".into(),
                    Box::new(move || verification::verify_eigen(n, 3, seed)),
                ));
            }
            other => {
                return Err(RunError::Usage(format!(
                    "unknown suite name '{other}' (expected one of {})",
                    SUITE_NAMES.join(", ")
                )));
            }
        }
    }
    Ok(jobs)
}

/// Re-evaluates a report's pass flag against a user-supplied spread
/// tolerance: every fitted constant must have relative spread within `tol`
/// and every check must hold.
fn apply_tolerance(report: &mut Report, tol: f64) {
    report.tolerance = tol;
    report.pass = report.fits.iter().all(|f| f.relative_spread <= tol)
        && report.checks.iter().all(|c| c.pass);
}

/// Validates the merged configuration, resolves the suite name and seed,
/// runs the selected suites and returns `(config snapshot, entries)` with
/// the entries in portfolio order. Suites run as independent rayon jobs;
/// the ordered collect keeps entry order (and content) identical for every
/// worker count.
///
/// The snapshot embedded in reports excludes the output directory and the
/// worker count: both are environment, not mathematics, and excluding them
/// keeps reports byte-identical across runs into different directories and
/// at different parallelism levels.
pub fn run_suites(cfg: &RunConfig) -> Result<(Value, Vec<(String, Report)>), RunError> {
    cfg.validate()?;
    let Some(name) = cfg.name.clone() else {
        return Err(RunError::Usage(format!(
            "missing suite name: pass --name or set \"name\" in the config file (one of {})",
            SUITE_NAMES.join(", ")
        )));
    };
    let seed = cfg.seed.unwrap_or(17);
    init_workers(cfg.workers.unwrap_or(0));

    let mut snapshot_cfg = cfg.clone();
    snapshot_cfg.name = Some(name.clone());
    snapshot_cfg.seed = Some(seed);
    snapshot_cfg.reg = Some(cfg.reg.unwrap_or(RegChoice::Abel));
    snapshot_cfg.out = None;
    snapshot_cfg.workers = None;
    let snapshot = serde_json::to_value(&snapshot_cfg)
        .map_err(|e| RunError::Numeric(format!("config serialization failed: {e}")))?;

    let jobs = suite_jobs(cfg, &name, seed)?;
    let results: Result<Vec<Report>, VerifyError> = jobs.par_iter().map(|(_, job)| job()).collect();
    let mut reports = results.map_err(RunError::from)?;
    if let Some(tol) = cfg.tol {
        for report in &mut reports {
            apply_tolerance(report, tol);
        }
    }
    let entries = jobs
        .into_iter()
        .map(|(entry, _)| entry)
        .zip(reports)
        .collect();
    Ok((snapshot, entries))
}

fn cmd_suite(args: &SuiteArgs) -> Result<i32, RunError> {
    let file_cfg = match &args.config {
        Some(path) => load_config_file(path)?,
        None => RunConfig::default(),
    };
    let cfg = file_cfg.overlaid_by(args.as_config());
    let (snapshot, entries) = run_suites(&cfg)?;
    let out = resolve_out_dir(&cfg.out);

    fs::create_dir_all(&out).map_err(|e| io_err("cannot create output directory", &out, e))?;
    let mut listing = Vec::new();
    for (entry, report) in &entries {
        let file = format!("report_{entry}.json");
        let path = out.join(&file);
        let report_value = serde_json::to_value(report)
            .map_err(|e| RunError::Numeric(format!("report serialization failed: {e}")))?;
        write_json_file(&path, &json!({"config": snapshot, "report": report_value}))?;
        println!(
            "suite {entry}: {} ({})",
            if report.pass { "PASS" } else { "FAIL" },
            path.display()
        );
        listing.push(json!({"name": entry, "pass": report.pass, "file": file}));
    }
    let all_pass = entries.iter().all(|(_, r)| r.pass);
    write_json_file(
        &out.join("summary.json"),
        &json!({"all_pass": all_pass, "config": snapshot, "suites": listing}),
    )?;
    if all_pass {
        println!("all {} suite(s) passed", entries.len());
        Ok(EXIT_PASS)
    } else {
        let failed = entries.iter().filter(|(_, r)| !r.pass).count();
        println!("{failed} of {} suite(s) failed", entries.len());
        Ok(EXIT_SUITE_FAILURE)
    }
}

// ---------------------------------------------------------------------------
// lambda
// ---------------------------------------------------------------------------

/// `{:.16e}` gives one leading digit plus sixteen decimals: 17 significant
/// digits, enough to reproduce any f64 exactly.
fn full_precision(x: f64) -> String {
    format!("{x:.16e}")
}

/// The permutation-sum term table as pretty-printed JSON, with its term
/// count.
pub fn lambda_terms_json(p: usize) -> Result<(String, usize), RunError> {
    if p > 8 {
        return Err(RunError::Usage(format!(
            "term table grows as p! and is capped at p <= 8, got {p}"
        )));
    }
    let dist = build_lambda_sigma_form(p);
    let mut text = serde_json::to_string_pretty(&dist)
        .map_err(|e| RunError::Numeric(format!("serialization failed: {e}")))?;
    text.push('\n');
    Ok((text, dist.terms.len()))
}

/// The Fourier coefficients over the index box `|a_j| <= a_bound` as CSV
/// (17 significant digits), with the number of data rows.
pub fn lambda_fourier_csv(p: usize, a_bound: i64) -> Result<(String, usize), RunError> {
    if a_bound < 1 {
        return Err(RunError::Usage(format!(
            "a_bound must be at least 1, got {a_bound}"
        )));
    }
    let width = 2 * a_bound + 1;
    let rows = (width as f64).powi(p as i32);
    if rows > 2e5 {
        return Err(RunError::Usage(format!(
            "index box holds {rows:.0} rows, capped at 200000; shrink p or a_bound"
        )));
    }
    let lambda = build_lambda(p);
    let mut csv = String::new();
    let header: Vec<String> = (1..=p)
        .map(|i| format!("a{i}"))
        .chain(["re".into(), "im".into()])
        .collect();
    let _ = writeln!(csv, "{}", header.join(","));
    let boxes: Vec<Vec<i64>> = if p == 0 {
        vec![Vec::new()]
    } else {
        (0..p)
            .map(|_| -a_bound..=a_bound)
            .multi_cartesian_product()
            .collect()
    };
    for a in &boxes {
        let c = fourier_coefficient(&lambda, a)
            .map_err(|e| RunError::Numeric(format!("coefficient at {a:?}: {e}")))?;
        let fields: Vec<String> = a
            .iter()
            .map(|x| x.to_string())
            .chain([full_precision(c.re), full_precision(c.im)])
            .collect();
        let _ = writeln!(csv, "{}", fields.join(","));
    }
    Ok((csv, boxes.len()))
}

fn cmd_lambda(args: &LambdaArgs) -> Result<i32, RunError> {
    let p = args.p;
    let out = resolve_out_dir(&args.out);
    fs::create_dir_all(&out).map_err(|e| io_err("cannot create output directory", &out, e))?;
    match args.mode {
        LambdaMode::Terms => {
            let (text, terms) = lambda_terms_json(p)?;
            let path = out.join(format!("lambda_p{p}_terms.json"));
            fs::write(&path, text).map_err(|e| io_err("cannot write", &path, e))?;
            println!("wrote {} ({terms} terms)", path.display());
        }
        LambdaMode::Fourier => {
            let (csv, rows) = lambda_fourier_csv(p, args.a_bound)?;
            let path = out.join(format!("lambda_p{p}_fourier.csv"));
            fs::write(&path, csv).map_err(|e| io_err("cannot write", &path, e))?;
            println!("wrote {} ({rows} rows)", path.display());
        }
    }
    Ok(EXIT_PASS)
}

// ---------------------------------------------------------------------------
// theta
// ---------------------------------------------------------------------------

/// Parses and chart-validates kernel application data for rank `n`: a JSON
/// object mapping chart index to an exponential-polynomial whose labels
/// must match the key and the rank.
pub fn parse_theta_data(n: usize, text: &str) -> Result<BTreeMap<usize, ExpPoly>, RunError> {
    let data: BTreeMap<usize, ExpPoly> =
        serde_json::from_str(text).map_err(|e| RunError::Usage(format!("data document: {e}")))?;
    for (&k, h) in &data {
        if h.n != n || h.k != k {
            return Err(RunError::Usage(format!(
                "data under chart key {k} is labeled for chart {} at rank {} (expected rank {n})",
                h.k, h.n
            )));
        }
        h.validate()
            .map_err(|e| RunError::Usage(format!("data on chart {k}: {e}")))?;
    }
    Ok(data)
}

/// Applies the kernel to the data and builds the per-chart audit document
/// (weight parts, raw pairing, weighted contribution per chart). Returns
/// the paired value together with the audit.
pub fn theta_audit(
    kernel: &ThetaKernel,
    data: &BTreeMap<usize, ExpPoly>,
) -> Result<(crate::Complex64, Value), RunError> {
    let value = apply_theta(kernel, data).map_err(|e| RunError::Usage(e.to_string()))?;
    let mut charts = Vec::new();
    for chart in &kernel.per_k {
        let pairing = match data.get(&chart.k) {
            Some(h) => {
                let f = h
                    .to_test_function()
                    .map_err(|e| RunError::Usage(format!("data on chart {}: {e}", chart.k)))?;
                pair(&chart.dist, &f)
                    .map_err(|e| RunError::Numeric(format!("pairing on chart {}: {e}", chart.k)))?
            }
            None => crate::Complex64::new(0.0, 0.0),
        };
        let weight = rat_to_f64(chart.weight.value());
        let weighted = pairing * weight;
        let weight_parts = serde_json::to_value(&chart.weight)
            .map_err(|e| RunError::Numeric(format!("serialization failed: {e}")))?;
        charts.push(json!({
            "k": chart.k,
            "weight_parts": weight_parts,
            "weight_rational": chart.weight.value().to_string(),
            "weight": weight,
            "data_supplied": data.contains_key(&chart.k),
            "pairing": [pairing.re, pairing.im],
            "weighted": [weighted.re, weighted.im],
        }));
    }
    let audit = json!({
        "n": kernel.n,
        "r": kernel.r,
        "value": [value.re, value.im],
        "charts": charts,
    });
    Ok((value, audit))
}

fn cmd_theta(args: &ThetaArgs) -> Result<i32, RunError> {
    let (n, r) = (args.n, args.r);
    if n == 0 {
        return Err(RunError::Usage("n must be positive".into()));
    }
    let text = fs::read_to_string(&args.data)
        .map_err(|e| io_err("cannot read data file", &args.data, e))?;
    let data = parse_theta_data(n, &text).map_err(|e| {
        RunError::Usage(format!(
            "data file {}: {}",
            args.data.display(),
            e.message()
        ))
    })?;
    let kernel = build_theta(n, r).map_err(|e| RunError::Usage(e.to_string()))?;
    let (value, audit) = theta_audit(&kernel, &data)?;

    let out = resolve_out_dir(&args.out);
    fs::create_dir_all(&out).map_err(|e| io_err("cannot create output directory", &out, e))?;
    let path = out.join(format!("theta_n{n}_r{r}_audit.json"));
    write_json_file(&path, &audit)?;
    println!("{}", json!([value.re, value.im]));
    println!("audit: {}", path.display());
    Ok(EXIT_PASS)
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::MPoly;
    use num_complex::Complex64;
    use serde_json::Map;

    fn c64(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn run_args(args: &[&str]) -> i32 {
        run(args.iter().map(|s| s.to_string()))
    }

    /// Parses a report file and zeroes the wall time, the only field that
    /// may differ between identical runs.
    fn normalized_report(path: &Path) -> Value {
        let mut v: Value = serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap();
        v["report"]["wall_time"] = json!(0.0);
        v
    }

    #[test]
    fn suite_run_writes_report_and_summary() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("reports");
        let code = run_args(&[
            "pproj",
            "suite",
            "run",
            "--name",
            "matchings",
            "--p-max",
            "6",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(code, EXIT_PASS);
        let report = normalized_report(&out.join("report_matchings.json"));
        assert_eq!(report["report"]["pass"], json!(true));
        assert_eq!(report["report"]["suite"], json!("matchings"));
        assert_eq!(report["report"]["params"]["p_max"], json!(6));
        assert_eq!(report["config"]["name"], json!("matchings"));
        assert_eq!(report["config"]["p"], json!(6));
        assert_eq!(report["config"]["seed"], json!(17));
        assert!(report["config"].get("out").is_none());
        let summary: Value =
            serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
        assert_eq!(summary["all_pass"], json!(true));
        assert_eq!(summary["suites"][0]["name"], json!("matchings"));
        assert_eq!(summary["suites"][0]["file"], json!("report_matchings.json"));
    }

    #[test]
    fn bogus_suite_name_is_usage_error_without_reports() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("reports");
        let code = run_args(&[
            "pproj",
            "suite",
            "run",
            "--name",
            "bogus",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(code, EXIT_USAGE);
        assert!(!out.exists(), "usage errors must not write anything");
    }

    #[test]
    fn oversized_parameters_are_usage_errors_without_reports() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("reports");
        let code = run_args(&[
            "pproj",
            "suite",
            "run",
            "--name",
            "matchings",
            "--p",
            "99",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(code, EXIT_USAGE);
        assert!(!out.exists());
    }

    #[test]
    fn invalid_tolerance_is_rejected() {
        let code = run_args(&[
            "pproj",
            "suite",
            "run",
            "--name",
            "matchings",
            "--tol",
            "1.5",
        ]);
        assert_eq!(code, EXIT_USAGE);
    }

    #[test]
    fn config_file_provides_defaults_and_flags_override() {
        let dir = tempfile::tempdir().unwrap();
        let cfg_path = dir.path().join("run.json");
        fs::write(&cfg_path, r#"{"name": "matchings", "p": 12, "seed": 5}"#).unwrap();
        let out = dir.path().join("reports");
        let code = run_args(&[
            "pproj",
            "suite",
            "run",
            "--config",
            cfg_path.to_str().unwrap(),
            "--p",
            "5",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(code, EXIT_PASS);
        let report = normalized_report(&out.join("report_matchings.json"));
        // Flag --p 5 overrides the file's 12; the file's seed survives.
        assert_eq!(report["report"]["params"]["p_max"], json!(5));
        assert_eq!(report["config"]["p"], json!(5));
        assert_eq!(report["config"]["seed"], json!(5));
    }

    #[test]
    fn unknown_config_keys_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let cfg_path = dir.path().join("run.json");
        fs::write(&cfg_path, r#"{"name": "matchings", "pmax": 6}"#).unwrap();
        let code = run_args(&[
            "pproj",
            "suite",
            "run",
            "--config",
            cfg_path.to_str().unwrap(),
        ]);
        assert_eq!(code, EXIT_USAGE);
    }

    #[test]
    fn reports_are_byte_identical_across_runs_and_directories() {
        let dir = tempfile::tempdir().unwrap();
        let out_a = dir.path().join("a");
        let out_b = dir.path().join("b");
        for out in [&out_a, &out_b] {
            let code = run_args(&[
                "pproj",
                "suite",
                "run",
                "--name",
                "matchings",
                "--p",
                "5",
                "--seed",
                "9",
                "--out",
                out.to_str().unwrap(),
            ]);
            assert_eq!(code, EXIT_PASS);
        }
        let a = normalized_report(&out_a.join("report_matchings.json"));
        let b = normalized_report(&out_b.join("report_matchings.json"));
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
        // The summary holds no wall time at all and must match byte for byte.
        assert_eq!(
            fs::read_to_string(out_a.join("summary.json")).unwrap(),
            fs::read_to_string(out_b.join("summary.json")).unwrap()
        );
    }

    #[test]
    fn tolerance_override_reevaluates_pass() {
        let mut report = Report {
            suite: "stub".into(),
            params: Map::new(),
            fits: vec![crate::verification::NamedFit {
                name: "c".into(),
                count: 3,
                mean: [1.0, 0.0],
                relative_spread: 0.5,
                printed: None,
                ratio_to_printed: None,
            }],
            checks: Vec::new(),
            truncation: Map::new(),
            tolerance: 1e-3,
            pass: false,
            seed: 0,
            wall_time: 0.0,
        };
        apply_tolerance(&mut report, 0.9);
        assert!(report.pass);
        assert_eq!(report.tolerance, 0.9);
        apply_tolerance(&mut report, 0.1);
        assert!(!report.pass);
    }

    #[test]
    fn lambda_terms_table_row_counts() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().to_str().unwrap().to_string();
        assert_eq!(
            run_args(&["pproj", "lambda", "--p", "2", "--out", &out]),
            EXIT_PASS
        );
        let table: Value = serde_json::from_str(
            &fs::read_to_string(dir.path().join("lambda_p2_terms.json")).unwrap(),
        )
        .unwrap();
        assert_eq!(table["terms"].as_array().unwrap().len(), 2);

        assert_eq!(
            run_args(&["pproj", "lambda", "--p", "0", "--out", &out]),
            EXIT_PASS
        );
        let table: Value = serde_json::from_str(
            &fs::read_to_string(dir.path().join("lambda_p0_terms.json")).unwrap(),
        )
        .unwrap();
        assert_eq!(table["terms"].as_array().unwrap().len(), 1);
    }

    #[test]
    fn lambda_fourier_csv_is_antisymmetric_and_full_precision() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().to_str().unwrap().to_string();
        let code = run_args(&[
            "pproj",
            "lambda",
            "--p",
            "2",
            "--mode",
            "fourier",
            "--a-bound",
            "2",
            "--out",
            &out,
        ]);
        assert_eq!(code, EXIT_PASS);
        let csv = fs::read_to_string(dir.path().join("lambda_p2_fourier.csv")).unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "a1,a2,re,im");
        assert_eq!(lines.len(), 1 + 25);
        let mut coeffs = std::collections::BTreeMap::new();
        for line in &lines[1..] {
            let f: Vec<&str> = line.split(',').collect();
            let a: (i64, i64) = (f[0].parse().unwrap(), f[1].parse().unwrap());
            let v = c64(f[2].parse().unwrap(), f[3].parse().unwrap());
            coeffs.insert(a, v);
        }
        // Swapping the index entries flips the sign; repeats vanish.
        assert_eq!(coeffs[&(1, 0)], -coeffs[&(0, 1)]);
        assert_eq!(coeffs[&(2, -1)], -coeffs[&(-1, 2)]);
        assert_eq!(coeffs[&(1, 1)], c64(0.0, 0.0));
        assert!(coeffs[&(1, 0)].norm() > 0.0);
        // Full-precision field format: 17 significant digits.
        assert_eq!(full_precision(2.0), "2.0000000000000000e0");
    }

    #[test]
    fn theta_applies_the_kernel_and_writes_the_audit() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().to_str().unwrap().to_string();

        // Rank 2, r = 1: data only on the pair chart; the pinned pairing
        // evaluates the envelope at the origin leaving weight 1/2.
        let mut h1 = ExpPoly::constant(2, 1, c64(1.0, 0.0));
        h1.terms[0].theta_freq = vec![c64(3.0, 0.0)];
        h1.terms[0].gauss = vec![0.7];
        let mut data = BTreeMap::new();
        data.insert(1usize, h1);
        let data_path = dir.path().join("data.json");
        fs::write(&data_path, serde_json::to_string(&data).unwrap()).unwrap();
        let code = run_args(&[
            "pproj",
            "theta",
            "--n",
            "2",
            "--r",
            "1",
            "--data",
            data_path.to_str().unwrap(),
            "--out",
            &out,
        ]);
        assert_eq!(code, EXIT_PASS);
        let audit: Value = serde_json::from_str(
            &fs::read_to_string(dir.path().join("theta_n2_r1_audit.json")).unwrap(),
        )
        .unwrap();
        assert!((audit["value"][0].as_f64().unwrap() - 0.5).abs() < 1e-12);
        assert!(audit["value"][1].as_f64().unwrap().abs() < 1e-12);
        let charts = audit["charts"].as_array().unwrap();
        assert_eq!(charts.len(), 2);
        assert_eq!(charts[0]["data_supplied"], json!(false));
        assert_eq!(charts[0]["pairing"], json!([0.0, 0.0]));
        assert_eq!(charts[1]["weight_rational"], json!("1/2"));
        assert!((charts[1]["pairing"][0].as_f64().unwrap() - 1.0).abs() < 1e-12);
        // The weighted chart contributions add up to the printed value.
        let total: f64 = charts
            .iter()
            .map(|c| c["weighted"][0].as_f64().unwrap())
            .sum();
        assert!((total - audit["value"][0].as_f64().unwrap()).abs() < 1e-15);
    }

    #[test]
    fn theta_rank_one_evaluates_the_data_at_the_origin() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().to_str().unwrap().to_string();
        let mut h0 = ExpPoly::constant(1, 0, c64(2.0, 1.0));
        h0.terms[0].phi_freq = vec![c64(5.0, 0.0)];
        let mut data = BTreeMap::new();
        data.insert(0usize, h0);
        let data_path = dir.path().join("data.json");
        fs::write(&data_path, serde_json::to_string(&data).unwrap()).unwrap();
        let code = run_args(&[
            "pproj",
            "theta",
            "--n",
            "1",
            "--r",
            "0",
            "--data",
            data_path.to_str().unwrap(),
            "--out",
            &out,
        ]);
        assert_eq!(code, EXIT_PASS);
        let audit: Value = serde_json::from_str(
            &fs::read_to_string(dir.path().join("theta_n1_r0_audit.json")).unwrap(),
        )
        .unwrap();
        assert!((audit["value"][0].as_f64().unwrap() - 2.0).abs() < 1e-12);
        assert!((audit["value"][1].as_f64().unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn theta_empty_data_gives_zero_and_mismatches_are_usage_errors() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().to_str().unwrap().to_string();
        let data_path = dir.path().join("empty.json");
        fs::write(&data_path, "{}").unwrap();
        let code = run_args(&[
            "pproj",
            "theta",
            "--n",
            "2",
            "--r",
            "1",
            "--data",
            data_path.to_str().unwrap(),
            "--out",
            &out,
        ]);
        assert_eq!(code, EXIT_PASS);
        let audit: Value = serde_json::from_str(
            &fs::read_to_string(dir.path().join("theta_n2_r1_audit.json")).unwrap(),
        )
        .unwrap();
        assert_eq!(audit["value"], json!([0.0, 0.0]));

        // Chart label mismatch inside the data is a usage error.
        let bad = ExpPoly::constant(2, 0, c64(1.0, 0.0));
        let mut data = BTreeMap::new();
        data.insert(1usize, bad);
        let bad_path = dir.path().join("bad.json");
        fs::write(&bad_path, serde_json::to_string(&data).unwrap()).unwrap();
        let code = run_args(&[
            "pproj",
            "theta",
            "--n",
            "2",
            "--r",
            "1",
            "--data",
            bad_path.to_str().unwrap(),
            "--out",
            &out,
        ]);
        assert_eq!(code, EXIT_USAGE);

        // r out of range for the rank is a usage error.
        let code = run_args(&[
            "pproj",
            "theta",
            "--n",
            "2",
            "--r",
            "2",
            "--data",
            data_path.to_str().unwrap(),
            "--out",
            &out,
        ]);
        assert_eq!(code, EXIT_USAGE);
    }

    #[test]
    fn theta_polynomial_data_vanishing_at_the_origin_pairs_to_zero() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().to_str().unwrap().to_string();
        let mut h1 = ExpPoly::constant(2, 1, c64(1.0, 0.0));
        h1.terms[0].poly = MPoly::monomial(vec![1], c64(1.0, 0.0));
        let mut data = BTreeMap::new();
        data.insert(1usize, h1);
        let data_path = dir.path().join("data.json");
        fs::write(&data_path, serde_json::to_string(&data).unwrap()).unwrap();
        let code = run_args(&[
            "pproj",
            "theta",
            "--n",
            "2",
            "--r",
            "1",
            "--data",
            data_path.to_str().unwrap(),
            "--out",
            &out,
        ]);
        assert_eq!(code, EXIT_PASS);
        let audit: Value = serde_json::from_str(
            &fs::read_to_string(dir.path().join("theta_n2_r1_audit.json")).unwrap(),
        )
        .unwrap();
        assert_eq!(audit["value"], json!([0.0, 0.0]));
    }

    #[test]
    fn out_dir_falls_back_to_env_then_reports() {
        assert_eq!(
            resolve_out_dir(&Some("explicit".into())),
            PathBuf::from("explicit")
        );
        // The environment fallback is read through the same resolver used
        // by every command; with neither flag nor env the default applies.
        if env::var_os(OUT_DIR_ENV).is_none() {
            assert_eq!(resolve_out_dir(&None), PathBuf::from("reports"));
        }
    }

    #[test]
    fn help_and_version_exit_zero() {
        assert_eq!(run_args(&["pproj", "--help"]), EXIT_PASS);
        assert_eq!(run_args(&["pproj", "--version"]), EXIT_PASS);
        assert_eq!(run_args(&["pproj", "suite", "run", "--help"]), EXIT_PASS);
        // Unknown flags are usage errors.
        assert_eq!(run_args(&["pproj", "--frobnicate"]), EXIT_USAGE);
    }
}
