use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use foilspace_cli::{cmd_audit, cmd_export_plotdata, cmd_fit, cmd_grid, cmd_ingest, CliResult, Overrides, RunConfig};

#[derive(Parser)]
#[command(name = "foilspace", version, about = "Build and audit latent design spaces of foil profiles")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Subcommand)]
enum Command {
    /// Build the dataset and write it as CSV.
    Ingest,
    /// Fit a latent space.
    Fit {
        /// Dataset CSV from `ingest`; built from the config when absent.
        #[arg(long)]
        dataset: Option<PathBuf>,
    },
    /// Sample and audit a fitted space.
    Audit {
        /// Directory written by `fit`.
        #[arg(long)]
        space: PathBuf,
    },
    /// Fit and audit every variant × scheme cell.
    Grid,
    /// Write plot-ready CSVs for a fitted space.
    ExportPlotdata {
        #[arg(long)]
        space: PathBuf,
        /// Directory written by `audit`.
        #[arg(long)]
        audit: Option<PathBuf>,
    },
    /// Print the resolved configuration.
    ShowConfig,
}

fn run(cli: Cli) -> CliResult<()> {
    let cfg = RunConfig::resolve(&cli.overrides)?;
    match cli.command {
        Command::Ingest => cmd_ingest(&cfg).map(drop),
        Command::Fit { dataset } => cmd_fit(&cfg, dataset.as_deref()).map(drop),
        Command::Audit { space } => cmd_audit(&cfg, &space).map(drop),
        Command::Grid => cmd_grid(&cfg).map(drop),
        Command::ExportPlotdata { space, audit } => cmd_export_plotdata(&cfg, &space, audit.as_deref()).map(drop),
        Command::ShowConfig => {
            print!("{}", cfg.to_toml());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
