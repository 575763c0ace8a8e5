//! `ilr`: plan, run and analyse randomized-prompt evaluations.

mod commands;
mod config;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ilr_core::Error;

use crate::commands::Workspace;
use crate::config::{OrpConfig, Overrides, RunConfig, StatsConfig};

#[derive(Parser)]
#[command(name = "ilr", version, about = "Instance-level randomized evaluation of multiple-choice benchmarks")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Run configuration (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Planner seed, overriding the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory, overriding the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Synthetic profile or endpoint config file replacing the configured backend.
    #[arg(long, global = true)]
    backend: Option<PathBuf>,
    /// Concurrent endpoint requests.
    #[arg(long = "max-inflight", global = true)]
    max_inflight: Option<usize>,
    /// Upper end of the ORP integration range.
    #[arg(long = "delta-max", global = true)]
    delta_max: Option<f64>,
    /// ORP grid steps.
    #[arg(long, global = true)]
    steps: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Draw the assignment plan(s) and write them to the output directory.
    Plan,
    /// Print rendered prompts as JSON lines.
    Render {
        #[arg(long)]
        experiment: Option<usize>,
        #[arg(long, default_value_t = 0)]
        repetition: usize,
        #[arg(long)]
        limit: Option<usize>,
    },
    /// Execute the plan against the configured backend.
    Run {
        /// Plan file to use instead of the one in the output directory.
        #[arg(long)]
        plan: Option<PathBuf>,
    },
    /// Variance decomposition, correlations, best-vs-worst t-test and variance curve per outcome file.
    Stats {
        outcomes: Vec<PathBuf>,
    },
    /// Pairwise ORP curves and the AUC matrix across models.
    Orp {
        outcomes: Vec<PathBuf>,
    },
    /// Standard deviation of the n-experiment mean against n.
    Curve {
        outcomes: Vec<PathBuf>,
        #[arg(long = "n-max")]
        n_max: Option<usize>,
        #[arg(long)]
        selections: Option<usize>,
        #[arg(long)]
        target: Option<f64>,
    },
    /// Summary across outcome files; refuses inputs from different configs.
    Report {
        outcomes: Vec<PathBuf>,
        /// Accept inputs produced under different configs.
        #[arg(long)]
        allow_mixed: bool,
    },
    /// Write a synthetic benchmark, factor space, model profiles and config.
    Synth {
        #[arg(long, default_value_t = 300)]
        instances: usize,
    },
}

struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Backend(_) => 3,
            Error::Precondition(_) | Error::NonFinite(_) => 4,
            _ => 2,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure {
        code: 2,
        message: message.into(),
    }
}

impl Global {
    fn overrides(&self) -> Overrides {
        Overrides {
            seed: self.seed,
            out: self.out.clone(),
            backend: self.backend.clone(),
            max_in_flight: self.max_inflight,
            delta_max: self.delta_max,
            steps: self.steps,
        }
    }

    fn run_config(&self) -> Result<RunConfig, Failure> {
        let path = self.config.as_deref().ok_or_else(|| usage("--config is required"))?;
        Ok(RunConfig::load(path, &self.overrides())?)
    }

    /// Analysis commands work from a config or from just an output directory.
    fn analysis(&self) -> Result<(Workspace, StatsConfig, OrpConfig), Failure> {
        match &self.config {
            Some(_) => {
                let c = self.run_config()?;
                Ok((Workspace::from_config(&c)?, c.stats, c.orp))
            }
            None => {
                let dir = self.out.clone().ok_or_else(|| usage("either --config or --out is required"))?;
                let mut orp = OrpConfig::default();
                if let Some(d) = self.delta_max {
                    orp.delta_max = d;
                }
                if let Some(s) = self.steps {
                    orp.steps = s;
                }
                let ws = Workspace {
                    dir,
                    config_digest: None,
                    seed: self.seed,
                };
                Ok((ws, StatsConfig::default(), orp))
            }
        }
    }
}

fn print_files(dir: &Path, files: &[PathBuf]) {
    for f in files {
        println!("{}", dir.join(f).display());
    }
}

fn dispatch(cli: Cli) -> Result<(), Failure> {
    let g = &cli.global;
    match cli.command {
        Command::Plan => {
            let c = g.run_config()?;
            print_files(&c.output_dir, &commands::cmd_plan(&c)?);
        }
        Command::Render {
            experiment,
            repetition,
            limit,
        } => {
            let c = g.run_config()?;
            print!("{}", commands::cmd_render(&c, experiment, repetition, limit)?);
        }
        Command::Run { plan } => {
            let c = g.run_config()?;
            print_files(&c.output_dir, &commands::cmd_run(&c, plan.as_deref())?);
        }
        Command::Stats { outcomes } => {
            let (ws, stats, _) = g.analysis()?;
            let files = commands::outcome_inputs(&ws.dir, &outcomes)?;
            let (_, text) = commands::cmd_stats(&ws, &files, &stats)?;
            print!("{text}");
        }
        Command::Orp { outcomes } => {
            let (ws, _, orp) = g.analysis()?;
            let files = commands::outcome_inputs(&ws.dir, &outcomes)?;
            let (_, text) = commands::cmd_orp(&ws, &files, &orp)?;
            print!("{text}");
        }
        Command::Curve {
            outcomes,
            n_max,
            selections,
            target,
        } => {
            let (ws, mut stats, _) = g.analysis()?;
            stats.n_max = n_max.or(stats.n_max);
            stats.n_selections = selections.unwrap_or(stats.n_selections);
            stats.target_std = target.or(stats.target_std);
            let files = commands::outcome_inputs(&ws.dir, &outcomes)?;
            let (_, text) = commands::cmd_curve(&ws, &files, &stats)?;
            print!("{text}");
        }
        Command::Report { outcomes, allow_mixed } => {
            let (ws, stats, orp) = g.analysis()?;
            let files = commands::outcome_inputs(&ws.dir, &outcomes)?;
            let (_, text) = commands::cmd_report(&ws, &files, &stats, &orp, allow_mixed)?;
            print!("{text}");
        }
        Command::Synth { instances } => {
            let dir = g.out.clone().ok_or_else(|| usage("synth needs --out"))?;
            let files = commands::cmd_synth(&dir, g.seed.unwrap_or(0), instances)?;
            print_files(&dir, &files);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
