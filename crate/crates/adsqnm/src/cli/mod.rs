//! Batch front-end: JSON config in, CSV/SVG/JSON artifacts and a manifest out.
//!
//! Subcommands: `run`, `validate`, `plot`, `export`, `schema`. Exit codes are 0 on success,
//! 1 when a stage fails, 2 when the configuration is invalid.

pub mod config;
pub mod manifest;
pub mod pipeline;
pub mod plot;
pub mod tables;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use thiserror::Error;

pub use config::{RunConfig, Stage, CONFIG_SCHEMA};
pub use manifest::{RunManifest, StageRecord, StageStatus, MANIFEST_FILE};
pub use pipeline::{resolve_output_dir, run, run_path, RunOptions};
pub use plot::{plot, PlotKind};
pub use tables::{CSV_SCHEMA_VERSION, EXPORT_SCHEMA};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    ConfigInvalid(String),
    #[error("stage {stage} failed: {message}")]
    StageFailure { stage: String, message: String, manifest: Box<RunManifest> },
    #[error("missing stage output: {0}")]
    MissingStageOutput(String),
    #[error("{file} does not match its schema: {found}")]
    SchemaMismatch { file: String, found: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::ConfigInvalid(_) => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ExportFormat {
    Csv,
    Json,
}

/// Check or convert a finished run's tables.
///
/// `csv` verifies that every listed CSV exists with its documented header and returns the
/// paths; `json` writes `export.json` (validated against the export schema) and returns it.
pub fn export(manifest: &RunManifest, format: ExportFormat) -> Result<Vec<PathBuf>, CliError> {
    let dir = &manifest.output_dir;
    let csvs: Vec<&String> = manifest.outputs.iter().filter(|o| o.ends_with(".csv")).collect();
    if csvs.is_empty() {
        return Err(CliError::MissingStageOutput("the run produced no tables".into()));
    }
    for rel in &csvs {
        tables::check_header(dir, rel)?;
    }
    match format {
        ExportFormat::Csv => Ok(csvs.iter().map(|r| dir.join(r)).collect()),
        ExportFormat::Json => {
            let value = tables::export_json(dir, &manifest.outputs, &manifest.config_hash)?;
            tables::validate_export(&value)?;
            let path = dir.join("export.json");
            tables::write_json(&path, &value)?;
            Ok(vec![path])
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "adsqnm", version, about = "Kerr-AdS quasinormal modes, quasimodes and resolvent scans")]
pub struct Cli {
    /// Repeat for more log output (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the pipeline described by a JSON config.
    Run {
        config: PathBuf,
        /// Output directory (overrides ADSQNM_OUT and the config).
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Check a config against the schema and the physical invariants.
    Validate { config: PathBuf },
    /// Draw an SVG from a finished run.
    Plot {
        manifest: PathBuf,
        #[arg(long, value_enum)]
        kind: PlotKind,
    },
    /// Verify the CSV tables or bundle them into export.json.
    Export {
        manifest: PathBuf,
        #[arg(long, value_enum, default_value = "json")]
        format: ExportFormat,
    },
    /// Print the config JSON schema.
    Schema,
}

fn manifest_at(path: &Path) -> Result<RunManifest, CliError> {
    let path = if path.is_dir() { path.join(MANIFEST_FILE) } else { path.to_path_buf() };
    RunManifest::load(&path)
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run { config, out, workers } => {
            let cfg = RunConfig::load(&config)?;
            let output_dir = Some(resolve_output_dir(&cfg, out));
            let result = run(&cfg, &RunOptions { output_dir, workers });
            let manifest = match &result {
                Ok(m) => m,
                Err(CliError::StageFailure { manifest, .. }) => manifest,
                Err(_) => return result.map(|_| ()),
            };
            for s in &manifest.stages {
                println!("{:<11} {:?} {:.2}s", s.stage.as_str(), s.status, s.wall_seconds);
            }
            println!("manifest: {}", manifest.output_dir.join(MANIFEST_FILE).display());
            if manifest.partial_success {
                println!("partial success: an optional stage did not complete");
            }
            result.map(|_| ())
        }
        Command::Validate { config } => {
            let cfg = RunConfig::load(&config)?;
            let plan: Vec<&str> = cfg.stage_plan().iter().map(|s| s.as_str()).collect();
            println!("valid; stages: {}", plan.join(" → "));
            Ok(())
        }
        Command::Plot { manifest, kind } => {
            let path = plot(&manifest_at(&manifest)?, kind)?;
            println!("{}", path.display());
            Ok(())
        }
        Command::Export { manifest, format } => {
            for p in export(&manifest_at(&manifest)?, format)? {
                println!("{}", p.display());
            }
            Ok(())
        }
        Command::Schema => {
            print!("{CONFIG_SCHEMA}");
            Ok(())
        }
    }
}

/// Parse `args` (including the program name), run, and return the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    let _ = env_logger::Builder::new().filter_level(level).parse_default_env().try_init();
    match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests;
