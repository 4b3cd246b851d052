//! Command-line front end for `regswitch`.
//!
//! ```text
//! rsjd simulate --config m.json --delta 0.01 --T 10 --seed 1 --out path.csv
//! rsjd converge --config m.json --deltas 0.1,0.05 --reps 1000 --T 10 --seed 1 --out err.csv
//! rsjd ruin     --config s.json --u 5,10 --reps 1000 --delta 0.01 --T 100 --seed 1 --out ruin.csv
//! rsjd analytic --config s.json [--out analytic.json]
//! ```
//!
//! Exit status is 0 on success, 1 for invalid input and 2 for failures
//! during computation or I/O.

pub mod config;
pub mod output;

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use regswitch::analytic::{printed, RuinAnalytics, RuinModelInputs};
use regswitch::drivers::make_stream;
use regswitch::mc::{convergence_study, ruin_study, StudyConfig};
use regswitch::models::{gl_coefficients, gl_exact_path, surplus_coefficients, SurplusParams};
use regswitch::scheme::simulate_path;
use regswitch::Error;

use config::{Model, ModelConfig};
use output::{fmt_f64, fmt_opt, Csv};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{0}")]
    Model(#[from] Error),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Usage(_) => 1,
            CliError::Io { .. } => 2,
            CliError::Model(e) => match e {
                Error::NegativeProbability { .. }
                | Error::NonFinite { .. }
                | Error::RootCountViolation { .. }
                | Error::DenominatorZero(_)
                | Error::SingularSystem { .. } => 2,
                _ => 1,
            },
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "rsjd", version, about = "Jump-adapted Euler simulation for regime-switching jump diffusions")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate one path and write it as CSV.
    Simulate(SimulateArgs),
    /// Strong error study for the geometric Lévy model.
    Converge(ConvergeArgs),
    /// Simulated expected ruin times for the surplus model.
    Ruin(RuinArgs),
    /// Closed-form ruin-time quantities for the surplus model.
    Analytic(AnalyticArgs),
}

#[derive(Debug, Args)]
pub struct Common {
    /// Model configuration (JSON).
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads; results do not depend on this.
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub delta: f64,
    #[arg(long = "T")]
    pub horizon: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ConvergeArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, value_delimiter = ',', required = true)]
    pub deltas: Vec<f64>,
    #[arg(long)]
    pub reps: usize,
    #[arg(long = "T")]
    pub horizon: f64,
    #[arg(long)]
    pub out: PathBuf,
    /// Fit summary (JSON). Defaults to the CSV path with a `.json` extension.
    #[arg(long)]
    pub summary: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RuinArgs {
    #[command(flatten)]
    pub common: Common,
    /// Initial reserves; defaults to `u` from the configuration.
    #[arg(long = "u", value_delimiter = ',')]
    pub reserves: Vec<f64>,
    #[arg(long)]
    pub reps: usize,
    #[arg(long)]
    pub delta: f64,
    #[arg(long = "T")]
    pub horizon: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct AnalyticArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Output file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn load_model(path: &Path) -> Result<Model, CliError> {
    ModelConfig::load(path)?.validate()
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents).map_err(|source| CliError::Io {
        path: path.to_owned(),
        source,
    })
}

fn require_surplus(model: Model, command: &str) -> Result<SurplusParams, CliError> {
    match model {
        Model::Surplus(p) => Ok(p),
        other => Err(CliError::Config(format!(
            "`{command}` needs a surplus model, got {}",
            other.name()
        ))),
    }
}

pub fn simulate(args: &SimulateArgs) -> Result<(), CliError> {
    let model = load_model(&args.common.config)?;
    let mut stream = make_stream(args.common.seed, 0);
    let csv = match &model {
        Model::GeometricLevy(p) => {
            let drivers = p.drivers(args.horizon, args.delta, &mut stream)?;
            let path = simulate_path(&gl_coefficients(p), &drivers, &[p.y0])?;
            let exact = gl_exact_path(p, &drivers)?;
            path_csv(&path, Some(&exact))
        }
        Model::Surplus(p) => {
            let drivers = p.drivers(args.horizon, args.delta, &mut stream)?;
            let path = simulate_path(&surplus_coefficients(p), &drivers, &[p.reserve])?;
            path_csv(&path, None)
        }
    };
    write_file(&args.out, &csv)
}

fn path_csv(
    path: &regswitch::scheme::SimulatedPath,
    exact: Option<&regswitch::scheme::SimulatedPath>,
) -> String {
    let mut header = vec!["t", "regime", "X", "is_jump", "X_pre_jump"];
    if exact.is_some() {
        header.push("y_exact");
    }
    let mut csv = Csv::new(&header);
    let grid = path.grid();
    for k in 0..path.len() {
        let mut row = vec![
            fmt_f64(grid.points()[k]),
            (path.regimes()[k] + 1).to_string(),
            fmt_f64(path.state(k)[0]),
            u8::from(grid.is_jump(k)).to_string(),
            fmt_opt(path.pre_jump_state(k).map(|x| x[0])),
        ];
        if let Some(e) = exact {
            row.push(fmt_f64(e.state(k)[0]));
        }
        csv.row(row);
    }
    csv.into_string()
}

pub fn converge(args: &ConvergeArgs) -> Result<(), CliError> {
    let p = match load_model(&args.common.config)? {
        Model::GeometricLevy(p) => p,
        other => {
            return Err(CliError::Config(format!(
                "`converge` needs a geometric_levy model, got {}",
                other.name()
            )))
        }
    };
    let cfg = StudyConfig {
        replications: args.reps,
        horizon: args.horizon,
        master_seed: args.common.seed,
        threads: args.common.threads,
    };
    let table = convergence_study(&p, &args.deltas, &cfg)?;

    let mut csv = Csv::new(&["delta", "mean_sup_sq_error", "stderr", "reps"]);
    for r in &table.rows {
        csv.row([
            fmt_f64(r.delta),
            fmt_f64(r.mean_sup_sq_error),
            fmt_f64(r.stderr),
            r.replications.to_string(),
        ]);
    }
    let summary = match &table.fit {
        Some(f) => json!({
            "slope": f.slope,
            "slope_stderr": f.slope_stderr,
            "intercept": f.intercept,
            "intercept_stderr": f.intercept_stderr,
            "nonpositive_paths": table.rows.iter().map(|r| r.nonpositive_paths).sum::<usize>(),
        }),
        None => json!({
            "slope": null,
            "slope_stderr": null,
            "intercept": null,
            "intercept_stderr": null,
            "nonpositive_paths": table.rows.iter().map(|r| r.nonpositive_paths).sum::<usize>(),
        }),
    };
    let summary_path = args
        .summary
        .clone()
        .unwrap_or_else(|| args.out.with_extension("json"));
    write_file(&args.out, &csv.into_string())?;
    write_file(&summary_path, &pretty(&summary))
}

pub fn ruin(args: &RuinArgs) -> Result<(), CliError> {
    let p = require_surplus(load_model(&args.common.config)?, "ruin")?;
    let reserves = if args.reserves.is_empty() {
        vec![p.reserve]
    } else {
        args.reserves.clone()
    };
    let cfg = StudyConfig {
        replications: args.reps,
        horizon: args.horizon,
        master_seed: args.common.seed,
        threads: args.common.threads,
    };
    let table = ruin_study(&p, args.delta, &reserves, &cfg)?;
    let mut csv = Csv::new(&["u", "xi1_exact_printed", "xi1_exact_solver", "xi1_sim", "stderr"]);
    for r in &table.rows {
        csv.row([
            fmt_f64(r.reserve),
            fmt_opt(r.exact_printed),
            fmt_f64(r.exact_solver),
            fmt_f64(r.sim_mean),
            fmt_f64(r.stderr),
        ]);
    }
    write_file(&args.out, &csv.into_string())
}

pub fn analytic_report(p: &SurplusParams) -> Result<serde_json::Value, CliError> {
    let inputs = RuinModelInputs::from_surplus(p)?;
    let a = RuinAnalytics::new(inputs)?;
    let mut report = json!({
        "pi": a.pi,
        "eta": a.eta,
        "rho": a.rho,
        "k": a.k,
        "D": a.d,
        "A1": a.a1,
        "B": a.b,
        "A2": a.a2,
        "residuals": { "cubic": a.cubic_residual, "linear_system": a.system_residual },
    });
    if inputs.is_reference() {
        report["printed"] = json!({
            "k": printed::K,
            "A1": printed::A1,
            "B": printed::B,
            "xi1_slope": printed::SLOPE,
        });
    }
    Ok(report)
}

pub fn analytic(args: &AnalyticArgs) -> Result<(), CliError> {
    let p = require_surplus(load_model(&args.config)?, "analytic")?;
    let text = pretty(&analytic_report(&p)?);
    match &args.out {
        Some(path) => write_file(path, &text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn pretty(v: &serde_json::Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json values serialize");
    s.push('\n');
    s
}

pub fn run(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Converge(a) => converge(a),
        Command::Ruin(a) => ruin(a),
        Command::Analytic(a) => analytic(a),
    }
}

/// Parses `args` (including the program name) and runs the command,
/// returning the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
