use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use vrgrad::commands;
use vrgrad::experiments::{self, EXPERIMENTS};
use vrgrad::runner::{resolve_threads, thread_pool};
use vrgrad::{CliError, ExperimentConfig};

#[derive(Parser)]
#[command(name = "vrgrad", version, about = "Variance-reduced proximal gradient methods with certified linear rates")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Flat `key = value` config file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output file (rate, tune, solve) or directory (reproduce). Defaults to stdout / `./<experiment>`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Number of runs; overrides `seeds` in the config.
    #[arg(long, global = true)]
    seeds: Option<usize>,
    /// Worker threads; falls back to VRGRAD_THREADS.
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Certified rate and step-size bounds as JSON.
    Rate,
    /// Recommended parameters and complexities as JSON; the complexity curve goes to `--out`.
    Tune,
    /// Run the solver and write a CSV trace.
    Solve,
    /// Regenerate the data behind a figure.
    Reproduce {
        /// One of fig1, fig2, fig3_saga, fig3_lsvrg, fig3_qsaga, fig3_ilsvrg, libsvm_lasso.
        /// Defaults to `experiment` in the config.
        name: Option<String>,
    },
}

fn load_config(cli: &Cli, base: ExperimentConfig) -> Result<ExperimentConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
            ExperimentConfig::parse_over(&text, base)?
        }
        None => base,
    };
    if let Some(s) = cli.seeds {
        if s == 0 {
            return Err(CliError::Input("--seeds must be at least 1".into()));
        }
        cfg.seeds = s;
    }
    Ok(cfg)
}

fn emit(out: Option<&PathBuf>, text: &str) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn peek_experiment(cli: &Cli) -> Result<Option<String>, CliError> {
    match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
            Ok(ExperimentConfig::parse(&text)?.experiment)
        }
        None => Ok(None),
    }
}

fn execute(cli: &Cli) -> Result<(), CliError> {
    let threads = resolve_threads(cli.threads).map_err(CliError::Input)?;
    match &cli.command {
        Command::Rate => emit(cli.out.as_ref(), &commands::cmd_rate(&load_config(cli, ExperimentConfig::default())?)?),
        Command::Tune => {
            let (report, curve) = commands::cmd_tune(&load_config(cli, ExperimentConfig::default())?)?;
            print!("{report}");
            if let Some(path) = &cli.out {
                std::fs::write(path, curve)?;
            }
            Ok(())
        }
        Command::Solve => {
            let cfg = load_config(cli, ExperimentConfig::default())?;
            emit(cli.out.as_ref(), &commands::cmd_solve(&cfg, &thread_pool(threads))?)
        }
        Command::Reproduce { name } => {
            let name = match name {
                Some(n) => n.clone(),
                None => peek_experiment(cli)?.ok_or_else(|| {
                    CliError::Input(format!("name an experiment, one of {EXPERIMENTS:?}"))
                })?,
            };
            let cfg = load_config(cli, experiments::defaults(&name)?)?;
            let bundle = experiments::reproduce(&name, &cfg, &thread_pool(threads))?;
            let dir = cli.out.clone().unwrap_or_else(|| PathBuf::from(&name));
            bundle.write_to(&dir)?;
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
