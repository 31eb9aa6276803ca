//! `gridform`: run scenarios, print analysis reports, run the acceptance suites.
//!
//! Exit codes: 0 success (including reported infeasibility findings),
//! 1 a verification criterion failed, 2 bad input (usage, unreadable or
//! invalid config), 3 the model has no solution or the integration blew up,
//! 4 the output could not be written.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod analyze;
mod report;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};
use gridform::config::{parse_scenario, preset, PRESETS};
use gridform::sim::{run_scenario, Scenario};
use gridform::verify::{run_suite, DEFAULT_SEED, SUITES};

/// The only environment variable read: default directory for CSV output.
pub const OUT_DIR_ENV: &str = "GRIDFORM_OUT_DIR";

#[derive(Parser)]
#[command(name = "gridform", version, about = "Grid-forming converter simulator and analysis tool")]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate a scenario and write its trajectory as CSV.
    Simulate(SimulateArgs),
    /// Closed-form reports: equilibrium, certificate, nose curve, droop, sharing gains.
    Analyze {
        #[command(subcommand)]
        what: analyze::Analysis,
    },
    /// Run an acceptance suite and print a JSON summary.
    Verify(VerifyArgs),
}

/// Where the scenario comes from.
#[derive(Args, Clone, Debug, Default)]
pub struct Source {
    /// Scenario file (TOML).
    #[arg(long, conflicts_with = "preset")]
    pub config: Option<PathBuf>,
    /// Bundled preset name.
    #[arg(long)]
    pub preset: Option<String>,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    source: Source,
    /// Output CSV; defaults to `<name>.csv` in $GRIDFORM_OUT_DIR or the working directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override the step size.
    #[arg(long)]
    dt: Option<f64>,
    /// Override the end time; events after it are dropped.
    #[arg(long)]
    t_end: Option<f64>,
}

#[derive(Args)]
struct VerifyArgs {
    /// One of matching, frequency, amplitude, sharing, lyapunov, identities,
    /// numerics, determinism, all.
    #[arg(long, default_value = "all")]
    suite: String,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Also write the JSON summary to this file.
    #[arg(long)]
    json: Option<PathBuf>,
}

/// A failure with its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub error: anyhow::Error,
}

impl Failure {
    pub fn input(e: impl Into<anyhow::Error>) -> Self {
        Self { code: 2, error: e.into() }
    }

    pub fn output(e: impl Into<anyhow::Error>) -> Self {
        Self { code: 4, error: e.into() }
    }

    /// Invalid configuration is the caller's fault; anything else the model's.
    pub fn model(e: gridform::Error) -> Self {
        let code = if matches!(e, gridform::Error::InvalidConfig(_)) { 2 } else { 3 };
        Self { code, error: e.into() }
    }
}

pub type CliResult<T> = Result<T, Failure>;

pub fn load(src: &Source, default_preset: Option<&str>) -> CliResult<Scenario> {
    match (&src.config, src.preset.as_deref().or(default_preset)) {
        (Some(path), _) => {
            let text = fs::read_to_string(path)
                .with_context(|| format!("cannot read {}", path.display()))
                .map_err(Failure::input)?;
            parse_scenario(&text)
                .with_context(|| format!("in {}", path.display()))
                .map_err(Failure::input)
        }
        (None, Some(name)) => preset(name).map_err(Failure::input),
        (None, None) => Err(Failure::input(anyhow!(
            "give --config FILE or --preset NAME (presets: {})",
            PRESETS.join(", ")
        ))),
    }
}

/// Default location for a CSV product.
pub fn default_out(file_name: &str) -> PathBuf {
    std::env::var_os(OUT_DIR_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("."))
        .join(file_name)
}

/// Writes through a sibling temporary file so a failed run leaves nothing behind.
pub fn write_atomic(path: &Path, contents: &[u8]) -> CliResult<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".partial");
    let tmp = PathBuf::from(tmp);
    let res = fs::File::create(&tmp)
        .and_then(|mut f| f.write_all(contents).and_then(|_| f.sync_all()))
        .and_then(|_| fs::rename(&tmp, path));
    res.map_err(|e| {
        let _ = fs::remove_file(&tmp);
        Failure::output(anyhow!("cannot write {}: {e}", path.display()))
    })
}

fn simulate(a: SimulateArgs) -> CliResult<()> {
    let mut sc = load(&a.source, None)?;
    if let Some(dt) = a.dt {
        sc.dt = dt;
    }
    if let Some(t_end) = a.t_end {
        sc.t_end = t_end;
        let before = sc.events.len();
        sc.events.retain(|e| e.time <= t_end);
        if sc.events.len() < before {
            eprintln!("note: {} event(s) after t_end = {t_end} s dropped", before - sc.events.len());
        }
    }
    sc.validate().map_err(Failure::model)?;
    let out = a.out.unwrap_or_else(|| default_out(&format!("{}.csv", sc.name)));
    let run = run_scenario(&sc).map_err(Failure::model)?;
    write_atomic(&out, run.series.to_csv_string().as_bytes())?;
    print!("{}", report::run_summary(&sc, &run));
    println!("csv = {}", out.display());
    Ok(())
}

fn verify(a: VerifyArgs) -> CliResult<bool> {
    if !SUITES.contains(&a.suite.as_str()) {
        return Err(Failure::input(anyhow!("unknown suite {:?}; available: {}", a.suite, SUITES.join(", "))));
    }
    let rep = run_suite(&a.suite, a.seed).map_err(Failure::model)?;
    for c in &rep.criteria {
        eprintln!("{}", c.summary_line());
    }
    let json = serde_json::to_string_pretty(&rep).map_err(Failure::output)?;
    if let Some(path) = &a.json {
        write_atomic(path, json.as_bytes())?;
    }
    println!("{json}");
    Ok(rep.passed)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match cli.cmd {
        Command::Simulate(a) => simulate(a).map(|_| true),
        Command::Analyze { what } => analyze::run(what).map(|_| true),
        Command::Verify(a) => verify(a),
    };
    match res {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}
