//! Command-line front end. [`cli_run`] parses arguments, runs one subcommand and
//! returns the process exit code.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::cohomology::{certify_diophantine, GOLDEN};
use crate::diffeo::TorusDiffeo;
use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::io::{list_from_json, list_to_json, read_json, write_json, write_json_pretty, FactorJson, FieldJson};
use crate::pipeline::{
    decompose, smoothness_probe, verify, PipelineConfig, RunReport, Timestamp, Verification, PROBE_DELTAS,
    PROBE_GRID,
};
use crate::suite;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFICATION: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_DIVERGENCE: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "commutators", version, about = "Write near-identity maps of T^2 as products of commutators")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Factor a map into commutator pairs and verify the product.
    Decompose(DecomposeArgs),
    /// Recompose a factors file and compare it with the input map.
    Verify(VerifyArgs),
    /// Finite-difference stability of the factors along a fixed direction.
    Probe(ProbeArgs),
    /// Empirical small-divisor certificate for a rotation number.
    Certify(CertifyArgs),
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Input map as a spectral field JSON file.
    #[arg(long)]
    input: PathBuf,
    /// Grid points per axis; defaults to the grid stored in the input.
    #[arg(long)]
    grid: Option<usize>,
    /// `golden` or `custom:<value>`.
    #[arg(long, default_value = "golden")]
    gamma: String,
    #[arg(long, default_value_t = 2.0)]
    tau: f64,
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    /// Newton iterations per leaf.
    #[arg(long)]
    max_iter: Option<usize>,
}

#[derive(Debug, Args)]
struct DecomposeArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Where to write the factors.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    report: Option<PathBuf>,
    /// Drop pairs whose bracket is the identity by inspection.
    #[arg(long)]
    prune: bool,
    /// Attach a smoothness probe to the report.
    #[arg(long)]
    probe: bool,
    /// Per-stage and per-leaf residuals as CSV.
    #[arg(long)]
    plot_data: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    factors: PathBuf,
    /// Grid points per axis; defaults to the grid stored in the factors.
    #[arg(long)]
    grid: Option<usize>,
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ProbeArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Step sizes, largest first.
    #[arg(long, value_delimiter = ',')]
    deltas: Option<Vec<f64>>,
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct CertifyArgs {
    #[arg(long, default_value = "golden")]
    gamma: String,
    #[arg(long, default_value_t = 2.0)]
    tau: f64,
    #[arg(long, default_value_t = 10_000)]
    k_scan: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Report written by `verify`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub grid: usize,
    pub verification: Verification,
    pub tol: f64,
    pub passed: bool,
}

pub fn parse_gamma(s: &str) -> Result<f64> {
    if s == "golden" {
        return Ok(GOLDEN);
    }
    let value = s
        .strip_prefix("custom:")
        .ok_or_else(|| Error::Input(format!("--gamma must be `golden` or `custom:<value>`, got `{s}`")))?;
    value
        .trim()
        .parse::<f64>()
        .map_err(|e| Error::Input(format!("--gamma {s}: {e}")))
}

fn exit_code(e: &Error) -> i32 {
    if e.is_divergence() {
        EXIT_DIVERGENCE
    } else {
        EXIT_INPUT
    }
}

/// Runs the command line `args` (program name first) and returns the exit code.
pub fn cli_run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    let outcome = match cli.command {
        Command::Decompose(a) => run_decompose(a),
        Command::Verify(a) => run_verify(a),
        Command::Probe(a) => run_probe(a),
        Command::Certify(a) => run_certify(a),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn load_input(path: &Path, grid: Option<usize>) -> Result<TorusDiffeo> {
    let json: FieldJson = read_json(path)?;
    if json.n != 2 {
        return Err(Error::Input(format!("{} holds a {}D field, expected 2D", path.display(), json.n)));
    }
    let spec = GridSpec::new(2, grid.unwrap_or(json.grid))?;
    json.diffeo(Some(spec))
}

fn config(run: &RunArgs, grid: usize) -> Result<PipelineConfig> {
    let mut cfg = PipelineConfig {
        grid,
        gamma: parse_gamma(&run.gamma)?,
        tau: run.tau,
        tol: run.tol,
        ..PipelineConfig::default()
    };
    if let Some(m) = run.max_iter {
        cfg.leafwise.herman.max_iter = m;
    }
    Ok(cfg)
}

fn run_decompose(a: DecomposeArgs) -> Result<i32> {
    let start = Instant::now();
    let f = load_input(&a.run.input, a.run.grid)?;
    let grid = f.grid();
    let cfg = config(&a.run, grid.n())?;
    let (list, mut report) = decompose(&f, &cfg)?;
    let list = if a.prune { list.pruned() } else { list };
    let factors = list_to_json(&list);
    if let Some(out) = &a.out {
        write_json(out, &factors)?;
    }
    // the reported residual is that of the emitted factors, read back
    let emitted = list_from_json(&factors, Some(grid))?;
    report.verification = verify(&f, &emitted)?;
    report.m = emitted.len();
    report.passed = report.verification.residual_c0 <= cfg.tol;
    if a.probe {
        let probe = smoothness_probe(&f, &suite::probe_direction(grid), &PROBE_DELTAS, &cfg)?;
        if !probe.stable {
            report
                .warnings
                .push(format!("probe ratios drift by {:.1}% under halving", 100.0 * probe.max_drift));
        }
        report.probe = Some(probe);
    }
    report.timestamp = Timestamp::since(start);
    if let Some(path) = &a.report {
        write_json_pretty(path, &report)?;
    }
    if let Some(path) = &a.plot_data {
        std::fs::write(path, plot_data(&report))?;
    }
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    println!(
        "m = {} (bounds {} / {} / {} per chart), residual c0 = {:.3e}, c1 = {:.3e}, tol = {:.1e}: {}",
        report.m,
        report.bounds.dimension_bound,
        report.bounds.cover_bound,
        report.bounds.per_chart,
        report.verification.residual_c0,
        report.verification.residual_c1,
        report.tol,
        if report.passed { "ok" } else { "FAILED" }
    );
    Ok(if report.passed { EXIT_OK } else { EXIT_VERIFICATION })
}

/// `series,chart,foliation,x,residual` rows: stage residuals against stage index,
/// then per-leaf Herman residuals against base point.
pub fn plot_data(report: &RunReport) -> String {
    let mut out = String::from("series,chart,foliation,x,residual\n");
    let opt = |v: Option<usize>| v.map(|v| v.to_string()).unwrap_or_default();
    for (i, s) in report.stages.iter().enumerate() {
        let _ = writeln!(out, "{},{},{},{},{:e}", s.stage, opt(s.chart), opt(s.foliation), i, s.residual);
    }
    for c in &report.leaf_curves {
        let n = c.residuals.len() as f64;
        for (j, r) in c.residuals.iter().enumerate() {
            let _ = writeln!(out, "leaf-herman,{},{},{},{:e}", c.chart, c.foliation, j as f64 / n, r);
        }
    }
    out
}

fn run_verify(a: VerifyArgs) -> Result<i32> {
    let factors: Vec<FactorJson> = read_json(&a.factors)?;
    let n = a.grid.or_else(|| factors.first().map(|p| p.g.grid));
    let f = load_input(&a.input, n)?;
    let list = list_from_json(&factors, Some(f.grid()))?;
    let verification = verify(&f, &list)?;
    let report = VerifyReport {
        grid: f.grid().n(),
        passed: verification.residual_c0 <= a.tol,
        verification,
        tol: a.tol,
    };
    if let Some(path) = &a.report {
        write_json_pretty(path, &report)?;
    }
    println!(
        "{} pairs, residual c0 = {:.3e}, c1 = {:.3e}, tol = {:.1e}: {}",
        report.verification.pairs,
        report.verification.residual_c0,
        report.verification.residual_c1,
        report.tol,
        if report.passed { "ok" } else { "FAILED" }
    );
    Ok(if report.passed { EXIT_OK } else { EXIT_VERIFICATION })
}

fn run_probe(a: ProbeArgs) -> Result<i32> {
    let f = load_input(&a.run.input, Some(a.run.grid.unwrap_or(PROBE_GRID)))?;
    let cfg = config(&a.run, f.grid().n())?;
    let deltas = a.deltas.unwrap_or_else(|| PROBE_DELTAS.to_vec());
    let table = smoothness_probe(&f, &suite::probe_direction(f.grid()), &deltas, &cfg)?;
    if let Some(path) = &a.report {
        write_json_pretty(path, &table)?;
    }
    for (d, row) in table.deltas.iter().zip(&table.ratios) {
        let worst = row.iter().copied().fold(0.0, f64::max);
        println!("delta = {d:.2e}: largest ratio {worst:.4e}");
    }
    println!(
        "max drift {:.2}%: {}",
        100.0 * table.max_drift,
        if table.stable { "stable" } else { "UNSTABLE" }
    );
    Ok(if table.stable { EXIT_OK } else { EXIT_VERIFICATION })
}

fn run_certify(a: CertifyArgs) -> Result<i32> {
    let cert = certify_diophantine(&[parse_gamma(&a.gamma)?], a.tau, a.k_scan)?;
    match &a.out {
        Some(path) => write_json_pretty(path, &cert)?,
        None => println!("{}", serde_json::to_string_pretty(&cert)?),
    }
    Ok(EXIT_OK)
}
