//! Experiment harness for the admission-control model: solve a scenario,
//! evaluate policies analytically, run seeded simulations, and sweep one
//! parameter across a grid, all emitting schema-stable CSV.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 numerical
//! non-convergence.

mod sweep;

use std::fmt;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use sliceorch::numfmt::fmt_sig;
use sliceorch::sim::{simulate_with, TraceWriter};
use sliceorch::solver::{greedy_policy, value_iteration, write_policy_csv, SolverSettings};
use sliceorch::{
    evaluate, simulate, ActionTable, Error, Policy, ScenarioConfig, SimulationSettings, StateSpace,
};

#[derive(Parser)]
#[command(
    name = "sliceorch",
    version,
    about = "Two-class slice admission control experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a scenario and report the resulting policy
    Solve {
        /// Scenario JSON
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_enum, default_value_t = PolicyChoice::Optimal)]
        policy: PolicyChoice,
        /// Write the per-state policy as CSV
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate a policy's steady-state measures analytically
    Evaluate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_enum, default_value_t = PolicyChoice::Optimal)]
        policy: PolicyChoice,
        /// Write the report CSV here instead of stdout
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a seeded slot simulation under a policy
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_enum, default_value_t = PolicyChoice::Optimal)]
        policy: PolicyChoice,
        /// Slots to simulate
        #[arg(long)]
        horizon: u64,
        /// Leading slots excluded from metrics (default: horizon / 100)
        #[arg(long)]
        warmup: Option<u64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write the metrics CSV here instead of stdout
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write a per-slot trace next to --out
        #[arg(long)]
        trace: bool,
    },
    /// Evaluate every point of a one-parameter sweep
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Sweep spec JSON: {"param", "values", "policies"}
        #[arg(long)]
        sweep: PathBuf,
        /// Output directory for the long CSV and figure data files
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PolicyChoice {
    Optimal,
    Greedy,
}

impl fmt::Display for PolicyChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PolicyChoice::Optimal => "optimal",
            PolicyChoice::Greedy => "greedy",
        })
    }
}

pub enum CliError {
    Usage(String),
    Core(Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Core(
                Error::UnconvergedValueIteration { .. } | Error::UnconvergedStationary { .. },
            ) => 2,
            CliError::Core(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(msg) => f.write_str(msg),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Core(Error::Io(e))
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // --help/--version land here too; those print to stdout and
            // succeed, while real usage errors must exit 1 (not clap's 2)
            let code = u8::from(e.use_stderr());
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Solve {
            config,
            policy,
            out,
        } => cmd_solve(&config, policy, out.as_deref()),
        Command::Evaluate {
            config,
            policy,
            out,
        } => cmd_evaluate(&config, policy, out.as_deref()),
        Command::Simulate {
            config,
            policy,
            horizon,
            warmup,
            seed,
            out,
            trace,
        } => cmd_simulate(
            &config,
            policy,
            horizon,
            warmup,
            seed,
            out.as_deref(),
            trace,
        ),
        Command::Sweep {
            config,
            sweep: spec,
            out,
        } => sweep::cmd_sweep(&config, &spec, &out),
    }
}

/// Load and validate a scenario, returning it with its id (the file stem).
pub fn load_config(path: &Path) -> Result<(ScenarioConfig, String), CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    let cfg = ScenarioConfig::from_json(&text)?;
    let id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "scenario".to_string());
    Ok((cfg, id))
}

pub fn solve_policy(
    cfg: &ScenarioConfig,
    space: &StateSpace,
    choice: PolicyChoice,
) -> Result<Policy, Error> {
    let settings = SolverSettings::default();
    match choice {
        PolicyChoice::Optimal => value_iteration(cfg, space, &settings),
        PolicyChoice::Greedy => greedy_policy(cfg, space, &settings),
    }
}

fn cmd_solve(config: &Path, choice: PolicyChoice, out: Option<&Path>) -> Result<(), CliError> {
    let (cfg, _) = load_config(config)?;
    let space = StateSpace::enumerate(&cfg)?;
    let policy = solve_policy(&cfg, &space, choice)?;
    println!("policy: {choice}");
    println!("states: {}", space.len());
    println!("iterations: {}", policy.iterations);
    println!("residual: {}", fmt_sig(policy.residual));
    println!(
        "value at empty state: {}",
        fmt_sig(policy.values[space.empty_state_index()])
    );
    if let Some(path) = out {
        let table = ActionTable::build(&cfg);
        write_policy_csv(fs::File::create(path)?, &policy, &space, &table)?;
        println!("policy CSV written to {}", path.display());
    }
    Ok(())
}

fn cmd_evaluate(config: &Path, choice: PolicyChoice, out: Option<&Path>) -> Result<(), CliError> {
    let (cfg, id) = load_config(config)?;
    let space = StateSpace::enumerate(&cfg)?;
    let policy = solve_policy(&cfg, &space, choice)?;
    let report = evaluate(&cfg, &space, &policy)?;
    let rows = [(id.as_str(), choice.to_string(), &report)];
    let rows: Vec<(&str, &str, &sliceorch::EvaluationReport)> =
        rows.iter().map(|(i, p, r)| (*i, p.as_str(), *r)).collect();
    match out {
        Some(path) => {
            sliceorch::analysis::write_report_csv(fs::File::create(path)?, &rows)?;
            println!("report written to {}", path.display());
        }
        None => sliceorch::analysis::write_report_csv(io::stdout().lock(), &rows)?,
    }
    Ok(())
}

fn cmd_simulate(
    config: &Path,
    choice: PolicyChoice,
    horizon: u64,
    warmup: Option<u64>,
    seed: u64,
    out: Option<&Path>,
    trace: bool,
) -> Result<(), CliError> {
    let (cfg, id) = load_config(config)?;
    let space = StateSpace::enumerate(&cfg)?;
    let policy = solve_policy(&cfg, &space, choice)?;
    let settings = SimulationSettings {
        horizon,
        warmup: warmup.unwrap_or(horizon / 100),
        seed,
    };
    let metrics = match (trace, out) {
        (true, None) => {
            return Err(CliError::Usage(
                "--trace needs --out to name the trace file".to_string(),
            ))
        }
        (true, Some(out)) => {
            let trace_path = out.with_extension("trace.csv");
            let mut writer = TraceWriter::new(fs::File::create(&trace_path)?)?;
            let metrics = simulate_with(
                &cfg,
                &space,
                &policy,
                &settings,
                |slot, state, action, o| writer.record(slot, state, action, o),
            )?;
            writer.finish()?;
            println!("trace written to {}", trace_path.display());
            metrics
        }
        (false, _) => simulate(&cfg, &space, &policy, &settings)?,
    };
    match out {
        Some(path) => {
            write_metrics_csv(fs::File::create(path)?, &id, choice, &settings, &metrics)?;
            println!("metrics written to {}", path.display());
        }
        None => write_metrics_csv(io::stdout().lock(), &id, choice, &settings, &metrics)?,
    }
    Ok(())
}

/// One metrics row:
/// `scenario_id,policy,slots,warmup,seed,avg_reward,arr_g,arr_b,adm_g,adm_b,drop_g,drop_b,drop_frac_g,drop_frac_b,drop_rate_g,drop_rate_b,mean_sg,mean_sb,mean_mg,mean_mb`.
fn write_metrics_csv<W: io::Write>(
    writer: W,
    scenario_id: &str,
    choice: PolicyChoice,
    settings: &SimulationSettings,
    m: &sliceorch::SimulationMetrics,
) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record([
        "scenario_id",
        "policy",
        "slots",
        "warmup",
        "seed",
        "avg_reward",
        "arr_g",
        "arr_b",
        "adm_g",
        "adm_b",
        "drop_g",
        "drop_b",
        "drop_frac_g",
        "drop_frac_b",
        "drop_rate_g",
        "drop_rate_b",
        "mean_sg",
        "mean_sb",
        "mean_mg",
        "mean_mb",
    ])
    .map_err(Error::from)?;
    w.write_record([
        scenario_id.to_string(),
        choice.to_string(),
        m.slots.to_string(),
        settings.warmup.to_string(),
        settings.seed.to_string(),
        fmt_sig(m.avg_reward),
        m.gs_arrivals.to_string(),
        m.be_arrivals.to_string(),
        m.gs_admissions.to_string(),
        m.be_admissions.to_string(),
        m.gs_drops.to_string(),
        m.be_drops.to_string(),
        fmt_sig(m.gs_drop_fraction),
        fmt_sig(m.be_drop_fraction),
        fmt_sig(m.gs_drop_rate()),
        fmt_sig(m.be_drop_rate()),
        fmt_sig(m.mean_sg),
        fmt_sig(m.mean_sb),
        fmt_sig(m.mean_mg),
        fmt_sig(m.mean_mb),
    ])
    .map_err(Error::from)?;
    w.flush().map_err(Error::from)?;
    Ok(())
}
