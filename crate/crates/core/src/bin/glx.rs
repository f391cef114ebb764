use clap::{Parser, Subcommand};
use glx_core::config::ExperimentConfig;
use glx_core::experiments;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "glx", version, about = "Ginzburg-Landau lattice field laboratory")]
struct Cli {
    /// Worker threads (default: machine parallelism).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment config.
    Run {
        config: PathBuf,
        /// Output directory (default: the config's `output.directory`).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Resume an interrupted sampling run from its manifest.
    Resume { manifest: PathBuf },
    /// Validate a config without running anything.
    Validate { config: PathBuf },
}

fn load_config(path: &PathBuf) -> Result<ExperimentConfig, String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    ExperimentConfig::from_toml(&text).map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
        {
            eprintln!("warning: could not set thread count: {e}");
        }
    }
    match cli.command {
        Command::Validate { config } => match load_config(&config) {
            Ok(_) => {
                println!("ok: {}", config.display());
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("invalid config: {e}");
                ExitCode::from(2)
            }
        },
        Command::Run { config, out } => {
            let cfg = match load_config(&config) {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("invalid config: {e}");
                    return ExitCode::from(2);
                }
            };
            let out_dir = out.unwrap_or_else(|| PathBuf::from(&cfg.output.directory));
            match experiments::run_experiment(&cfg, &out_dir) {
                Ok(outcome) => {
                    println!("{}", outcome.summary);
                    println!("manifest: {}", outcome.manifest_path.display());
                    if outcome.abort.is_some() {
                        eprintln!("run aborted; partial artifacts persisted");
                        ExitCode::from(3)
                    } else {
                        ExitCode::SUCCESS
                    }
                }
                Err(e) => {
                    eprintln!("run failed: {e}");
                    ExitCode::from(3)
                }
            }
        }
        Command::Resume { manifest } => match experiments::resume(&manifest) {
            Ok(outcome) => {
                println!("{}", outcome.summary);
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("resume failed: {e}");
                ExitCode::from(3)
            }
        },
    }
}
