use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use datapricing_core::verification::{Deviation, Role};

use crate::commands::{self, DEFAULT_CONSISTENCY_SIZES, DEFAULT_EPSILONS, DEFAULT_NASH_SIZES};
use crate::config::ResolvedConfig;
use crate::error::{exit, CliError};
use crate::exec::RayonExecutor;
use crate::output::{timestamp, OutputSink, RunManifest};

#[derive(Debug, Parser)]
#[command(
    name = "datapricing",
    version,
    about = "Mean-field Stackelberg data-pricing simulator"
)]
pub struct Cli {
    /// Parameter file (JSON). Defaults to the built-in baseline parameters.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR", default_value = "out")]
    pub out: PathBuf,
    /// Root seed (overrides the config).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Number of Monte Carlo paths (overrides the config).
    #[arg(long, global = true)]
    pub paths: Option<usize>,
    /// Number of time steps (overrides the config).
    #[arg(long, global = true)]
    pub steps: Option<usize>,
    /// Worker threads; defaults to one per core.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check the model invariants and write a report.
    Validate,
    /// Riccati tables and solvability determinants.
    Solve,
    /// Mean-field paths, mean price/effort curves and a summary row.
    Simulate {
        /// Also write per-seller quality and effort paths.
        #[arg(long)]
        population: bool,
        /// Number of sellers to write (the simulation always uses all `n`).
        #[arg(long)]
        sellers: Option<usize>,
    },
    /// Monte Carlo estimates of every payoff functional.
    Objectives,
    /// Empirical checks of the asymptotic claims.
    Verify {
        #[command(subcommand)]
        check: VerifyCommand,
    },
    /// Re-run the pipeline for several values of one parameter.
    Sweep {
        /// Parameter name, e.g. rho, kappa or c.
        #[arg(long)]
        param: String,
        /// Comma-separated values.
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true, required = true)]
        values: Vec<f64>,
    },
}

#[derive(Debug, Subcommand)]
pub enum VerifyCommand {
    /// Mean-field consistency rate.
    Consistency {
        /// Comma-separated population sizes.
        #[arg(long, value_delimiter = ',')]
        n_values: Option<Vec<usize>>,
    },
    /// Gains of unilateral deviations of one seller.
    Nash {
        #[arg(long, value_delimiter = ',')]
        n_values: Option<Vec<usize>>,
        /// Floor applied to mean gaps inside the log fit only.
        #[arg(long, default_value_t = 0.0)]
        floor: f64,
        /// Add the replayed best response to the deviation family.
        #[arg(long)]
        with_replay: bool,
    },
    /// First- and second-order conditions of the leaders' prices.
    Stationarity {
        #[arg(long, value_enum, default_value_t = RoleArg::Both)]
        role: RoleArg,
        /// Number of random perturbation directions per role.
        #[arg(long, default_value_t = 3)]
        directions: usize,
        #[arg(long, value_delimiter = ',')]
        epsilons: Option<Vec<f64>>,
        /// Sup-norm of each perturbation direction.
        #[arg(long, default_value_t = 0.2)]
        amplitude: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RoleArg {
    Broker,
    Buyer,
    Both,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Validate => "validate",
            Command::Solve => "solve",
            Command::Simulate { .. } => "simulate",
            Command::Objectives => "objectives",
            Command::Verify { check } => match check {
                VerifyCommand::Consistency { .. } => "verify consistency",
                VerifyCommand::Nash { .. } => "verify nash",
                VerifyCommand::Stationarity { .. } => "verify stationarity",
            },
            Command::Sweep { .. } => "sweep",
        }
    }
}

/// Parses `args` (including the program name), runs the subcommand and
/// returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { exit::USAGE } else { exit::OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn resolve(cli: &Cli) -> Result<ResolvedConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(path) => ResolvedConfig::from_path(path)?,
        None => ResolvedConfig::baseline(),
    };
    if let Some(s) = cli.seed {
        cfg.controls.seed = s;
    }
    if let Some(p) = cli.paths {
        cfg.controls.n_paths = p;
    }
    if let Some(s) = cli.steps {
        cfg.controls.n_steps = s;
    }
    cfg.controls
        .validate()
        .map_err(|e| CliError::Validation(e.to_string()))?;
    Ok(cfg)
}

fn execute(cli: &Cli) -> Result<i32, CliError> {
    let cfg = resolve(cli)?;
    let name = cli.command.name();
    if !matches!(cli.command, Command::Validate) {
        commands::gate(&cfg.params)?;
    }
    let exec = RayonExecutor::new(cli.threads).map_err(|e| CliError::Usage(e.to_string()))?;
    let mut sink = OutputSink::create(&cli.out)?;
    sink.text("config.resolved.json", &cfg.canonical_json())?;

    let mut code = exit::OK;
    match &cli.command {
        Command::Validate => {
            if !commands::validate_cmd(&cfg, &mut sink)? {
                code = exit::VALIDATION;
            }
        }
        Command::Solve => commands::solve_cmd(&cfg, &mut sink)?,
        Command::Simulate { population, sellers } => {
            commands::simulate_cmd(&cfg, &exec, &mut sink, *population, *sellers)?
        }
        Command::Objectives => commands::objectives_cmd(&cfg, &exec, &mut sink)?,
        Command::Verify { check } => match check {
            VerifyCommand::Consistency { n_values } => {
                let n = n_values.clone().unwrap_or_else(|| DEFAULT_CONSISTENCY_SIZES.to_vec());
                commands::consistency_cmd(&cfg, &exec, &mut sink, &n)?;
            }
            VerifyCommand::Nash {
                n_values,
                floor,
                with_replay,
            } => {
                let n = n_values.clone().unwrap_or_else(|| DEFAULT_NASH_SIZES.to_vec());
                let mut family = Deviation::default_family();
                if *with_replay {
                    family.push(Deviation::BestResponseReplay);
                }
                commands::nash_cmd(&cfg, &exec, &mut sink, &n, &family, *floor)?;
            }
            VerifyCommand::Stationarity {
                role,
                directions,
                epsilons,
                amplitude,
            } => {
                let roles = match role {
                    RoleArg::Broker => vec![Role::Broker],
                    RoleArg::Buyer => vec![Role::Buyer],
                    RoleArg::Both => vec![Role::Broker, Role::Buyer],
                };
                let eps = epsilons.clone().unwrap_or_else(|| DEFAULT_EPSILONS.to_vec());
                commands::stationarity_cmd(&cfg, &exec, &mut sink, &roles, *directions, &eps, *amplitude)?;
            }
        },
        Command::Sweep { param, values } => {
            commands::sweep_cmd(&cfg, &exec, &mut sink, param, values)?;
        }
    }

    RunManifest {
        config_hash: cfg.hash(),
        subcommand: name,
        seed: cfg.controls.seed,
        tool_version: env!("CARGO_PKG_VERSION"),
        timestamp: timestamp(),
        output_files: sink.files().to_vec(),
    }
    .write(sink.dir())?;
    Ok(code)
}
