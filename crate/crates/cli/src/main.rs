use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qqn_cli::commands::checkpoint_scenario;
use qqn_cli::config::{parse_overrides, read_config_file};
use qqn_cli::{build, CliError, FlagValues, RunConfig};
use qqn_core::Scenario;

/// Train and evaluate quadratic Q-learning agents for lane changes and ramp merges.
#[derive(Parser)]
#[command(name = "qqn", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train an agent, writing checkpoints, the episode log and an interval summary.
    Train(Common),
    /// Evaluate a checkpoint file or every checkpoint in a directory.
    Eval(Common),
    /// Write one greedy episode step by step.
    ExportTraj(Common),
}

#[derive(Args)]
struct Common {
    /// Flat `key = value` config file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    scenario: Option<Scenario>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Training episodes for `train`, evaluation episodes for `eval`.
    #[arg(long)]
    episodes: Option<usize>,
    /// Checkpoint file or directory (eval and export-traj).
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    /// `key=value` overrides applied after the config file.
    overrides: Vec<String>,
}

impl Common {
    fn run_config(&self, fallback: Option<Scenario>, episodes_are_eval: bool) -> Result<RunConfig, CliError> {
        let mut entries = match &self.config {
            Some(p) => read_config_file(p)?,
            None => Vec::new(),
        };
        entries.extend(parse_overrides(&self.overrides)?);
        let flags = FlagValues {
            scenario: self.scenario,
            seed: self.seed,
            out: self.out.clone(),
            episodes: if episodes_are_eval { None } else { self.episodes },
        };
        let mut cfg = build(&entries, &flags, fallback)?;
        if episodes_are_eval {
            if let Some(n) = self.episodes {
                cfg.train.eval_episodes = n;
                cfg.validate().map_err(CliError::Config)?;
            }
        }
        Ok(cfg)
    }

    fn checkpoint(&self) -> Result<&Path, CliError> {
        self.checkpoint
            .as_deref()
            .ok_or_else(|| CliError::Config("--checkpoint is required".into()))
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Train(args) => {
            let cfg = args.run_config(None, false)?;
            let report = qqn_cli::train(&cfg)?;
            eprintln!(
                "trained {} episodes, {} checkpoints in {}",
                report.log.len(),
                report.checkpoint_paths.len(),
                cfg.out.display()
            );
        }
        Command::Eval(args) => {
            let path = args.checkpoint()?;
            let cfg = args.run_config(Some(checkpoint_scenario(path)?), true)?;
            qqn_cli::eval(&cfg, path)?;
        }
        Command::ExportTraj(args) => {
            let path = args.checkpoint()?;
            let cfg = args.run_config(Some(checkpoint_scenario(path)?), false)?;
            qqn_cli::export_traj(&cfg, path)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
