mod config;
mod experiments;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use config::{Experiment, ExperimentConfig};
use experiments::{Outcome, RunContext};
use output::OutputDir;

const CONFIG_HELP: &str = "\
Configuration (TOML):
  experiment       optional; must match the subcommand
  seed             default 0; overridden by --seed
  out              default \"out\"; overridden by --out
  backend          { kind = \"euclidean\", dim, coords = \"cartesian\" | \"polar\" }
                   { kind = \"real_hyperbolic\", dim } | { kind = \"complex_hyperbolic2\" }
  connection       optional 1-form on a constant-curvature backend:
                   { kind = \"zero\" | \"constant\" | \"exact\" | \"linear\" | \"sum\", ... }
  [region]         lower, upper, cells (at least 4 per axis), periodic_axis (optional)
  thickness        scalar field, default { kind = \"constant\", value = 0.1 }
  thickness_file   optional CSV with a column `h`, one row per node
  [initial]        field (scalar field, optional), random_amplitude (default 0)
  winding          optional { m, period } jump across the periodic seam
  reference        optional potential v; solve reports max |u0 + v - mean v|
  save_chart       default false; fields writes chart.json
  [solver]         eps_schedule = [] (generated), eps_start = 1, eps_factor = 0.25,
                   eps_min = 1e-5, newton_rtol = 1e-10, newton_atol = 1e-12,
                   max_newton = 60, backtrack_factor = 0.5, armijo = 1e-4,
                   max_backtracks = 50, continuation_tol = 1e-6, early_stop = true,
                   interior_margin = 0.1
  [helix]          windings = [-2, -1, 0, 1, 2], periods = [0.05, 0.1, 0.2],
                   loop_node = [] (middle ring), require_holonomy = true,
                   holonomy_tol = 1e-8
  [diagnose]       center (region midpoint), lambdas (8 levels of q), rhos (4 radii)
  [verify]         checks = [] (names or ids of acceptance checks, or \"all\")

Exit codes: 0 success, 1 failure, 2 invalid input, 3 solver nonconvergence.";

#[derive(Parser)]
#[command(name = "steiner", version, about = "Symmetrization of invariant domains", after_help = CONFIG_HELP)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonArgs {
    /// TOML experiment configuration.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory for report.json and tables.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Random seed for initial guesses and sampled checks.
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
    /// Worker threads; all cores by default.
    #[arg(long, value_name = "N")]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Sample k, |W| and the orbit metric at the cell centers.
    Fields(CommonArgs),
    /// Symmetrize the configured domain.
    Solve(CommonArgs),
    /// Scan winding numbers over a chart with a periodic seam.
    Helix(CommonArgs),
    /// Level-set energies and ellipticity bounds at the solution.
    Diagnose(CommonArgs),
    /// Check chart invariants and run named acceptance checks.
    Verify {
        #[command(flatten)]
        common: CommonArgs,
        /// Acceptance check name or id; repeatable, `all` runs every check.
        #[arg(long = "check", value_name = "NAME")]
        checks: Vec<String>,
    },
}

/// Invalid input, reported with the offending field.
#[derive(Debug)]
pub struct ConfigError {
    pub field: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            field: field.into(),
            message: message.into(),
        }
    }
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "invalid `{}`: {}", self.field, self.message)
    }
}

impl std::error::Error for ConfigError {}

const EXIT_FAILURE: u8 = 1;
const EXIT_VALIDATION: u8 = 2;
const EXIT_NONCONVERGENCE: u8 = 3;

fn classify(err: &anyhow::Error) -> (u8, &'static str, Option<Value>) {
    for cause in err.chain() {
        if cause.downcast_ref::<ConfigError>().is_some() {
            return (EXIT_VALIDATION, "validation", None);
        }
        if let Some(e) = cause.downcast_ref::<steiner_core::Error>() {
            if e.is_validation() {
                return (EXIT_VALIDATION, "validation", None);
            }
            if let steiner_core::Error::Nonconvergence(info) = e {
                return (EXIT_NONCONVERGENCE, "nonconvergence", serde_json::to_value(info).ok());
            }
        }
    }
    (EXIT_FAILURE, "failure", None)
}

fn error_message(err: &anyhow::Error) -> String {
    err.chain().map(|c| c.to_string()).collect::<Vec<_>>().join(": ")
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (experiment, common, checks) = match cli.command {
        Command::Fields(c) => (Experiment::Fields, c, Vec::new()),
        Command::Solve(c) => (Experiment::Solve, c, Vec::new()),
        Command::Helix(c) => (Experiment::Helix, c, Vec::new()),
        Command::Diagnose(c) => (Experiment::Diagnose, c, Vec::new()),
        Command::Verify { common, checks } => (Experiment::Verify, common, checks),
    };
    ExitCode::from(run(experiment, &common, &checks))
}

fn run(experiment: Experiment, args: &CommonArgs, cli_checks: &[String]) -> u8 {
    if let Some(n) = args.threads {
        if n == 0 {
            eprintln!("error: invalid `--threads`: must be at least 1");
            return EXIT_VALIDATION;
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot configure threads: {e}");
            return EXIT_FAILURE;
        }
    }

    let loaded = match &args.config {
        Some(path) => ExperimentConfig::load(path).map(Some),
        None if experiment == Experiment::Verify => Ok(None),
        None => Err(ConfigError::new("--config", "required for this subcommand")),
    };
    let out_dir = args
        .out
        .clone()
        .or_else(|| loaded.as_ref().ok().and_then(|c| c.as_ref()).and_then(|c| c.out.clone()))
        .unwrap_or_else(|| PathBuf::from("out"));
    let out = match OutputDir::create(&out_dir) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {}", error_message(&e));
            return EXIT_FAILURE;
        }
    };
    let seed = args
        .seed
        .or_else(|| loaded.as_ref().ok().and_then(|c| c.as_ref()).and_then(|c| c.seed))
        .unwrap_or(0);

    let start = Instant::now();
    let result = loaded
        .map_err(anyhow::Error::from)
        .and_then(|config| execute(experiment, config.as_ref(), seed, &out, cli_checks));
    let elapsed = start.elapsed().as_secs_f64();

    let (code, report) = match result {
        Ok((outcome, timings)) => {
            let status = if outcome.passed { "ok" } else { "failed" };
            let code = if outcome.passed { 0 } else { EXIT_FAILURE };
            if !outcome.passed {
                eprintln!("error: one or more checks failed");
            }
            let _ = out.json(
                "timing.json",
                &json!({ "elapsed_seconds": elapsed, "threads": rayon::current_num_threads(), "checks": timings }),
            );
            (
                code,
                json!({ "experiment": experiment.name(), "status": status, "seed": seed, "result": outcome.result }),
            )
        }
        Err(err) => {
            let (code, kind, details) = classify(&err);
            let message = error_message(&err);
            eprintln!("error: {message}");
            let _ = out.json(
                "timing.json",
                &json!({ "elapsed_seconds": elapsed, "threads": rayon::current_num_threads() }),
            );
            (
                code,
                json!({
                    "experiment": experiment.name(),
                    "status": "error",
                    "seed": seed,
                    "error": { "kind": kind, "exit_code": code, "message": message, "details": details },
                }),
            )
        }
    };
    if let Err(e) = out.json("report.json", &report) {
        eprintln!("error: {}", error_message(&e));
        return EXIT_FAILURE;
    }
    code
}

fn execute(
    experiment: Experiment,
    config: Option<&ExperimentConfig>,
    seed: u64,
    out: &OutputDir,
    cli_checks: &[String],
) -> anyhow::Result<(Outcome, Value)> {
    if let Some(c) = config {
        c.check_experiment(experiment)?;
    }
    if experiment == Experiment::Verify {
        let ctx = config.map(|config| RunContext { config, seed, out });
        let mut names = config.map(|c| c.verify.checks.clone()).unwrap_or_default();
        let configured = names.len();
        names.extend(cli_checks.iter().cloned());
        let (outcome, checks) = experiments::verify(ctx.as_ref(), seed, &names, configured)?;
        for c in &checks {
            println!("{}", c.summary_line());
        }
        let timings: Vec<Value> = checks
            .iter()
            .map(|c| json!({ "name": c.name, "elapsed_seconds": c.elapsed, "budget_seconds": c.budget }))
            .collect();
        return Ok((outcome, Value::Array(timings)));
    }
    let config = config.expect("config present for non-verify experiments");
    let ctx = RunContext { config, seed, out };
    let outcome = match experiment {
        Experiment::Fields => experiments::fields(&ctx)?,
        Experiment::Solve => experiments::solve(&ctx)?,
        Experiment::Helix => experiments::helix(&ctx)?,
        Experiment::Diagnose => experiments::diagnose(&ctx)?,
        Experiment::Verify => unreachable!(),
    };
    Ok((outcome, Value::Null))
}
