//! Batch front-end: dataset ingest, latent-space fitting, auditing, the
//! variant × scheme grid and plot-data export. Every command writes under
//! one run directory and leaves a `run-manifest.json` there.

pub mod commands;
pub mod config;
pub mod error;

pub use commands::{
    cmd_audit, cmd_export_plotdata, cmd_fit, cmd_grid, cmd_ingest, summary_csv, FitSummary, GridRow, RunManifest,
};
pub use config::{EvaluatorChoice, Overrides, RunConfig};
pub use error::{CliError, CliResult, EXIT_CONFIG, EXIT_DATA, EXIT_EXTERNAL, EXIT_NUMERIC};
