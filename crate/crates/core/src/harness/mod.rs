//! JSON-configured experiment runner.
//!
//! A run reads an [`ExperimentConfig`], executes its command, and writes
//! `<command>_report.json`, one `<command>_<table>.csv` per table, a
//! `<command>_timing.json` sidecar and a `<command>_plot.py` script.

pub mod commands;
pub mod config;
pub mod plot;
pub mod report;

use std::path::{Path, PathBuf};
use std::time::Instant;

pub use config::{Command, ExperimentConfig, SpectrumTarget, Tolerances, Variant};
pub use plot::plot_script;
pub use report::{write_report, Cell, ExperimentReport, Table, WrittenFiles};

use crate::error::{Error, Result};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

/// Command-line overrides applied on top of the config file.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub output_dir: Option<PathBuf>,
    pub seed: Option<u64>,
}

/// Runs `cfg` in memory.
pub fn execute(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let start = Instant::now();
    let out = commands::execute(cfg)?;
    let command = cfg.command;
    Ok(ExperimentReport {
        tool: "freejac".to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        command,
        seed: cfg.seed,
        config: cfg.clone(),
        pass: out.failures.is_empty(),
        failures: out.failures,
        results: serde_json::Value::Object(out.results),
        tables: out
            .tables
            .iter()
            .map(|t| ExperimentReport::table_file_name(command, &t.name))
            .collect(),
        table_data: out.tables,
        wall_clock_seconds: start.elapsed().as_secs_f64(),
    })
}

/// Loads the config at `path`, applies `opts`, executes and writes outputs.
pub fn run(path: &Path, opts: &RunOptions) -> Result<(ExperimentReport, WrittenFiles)> {
    let mut cfg = ExperimentConfig::load(path)?;
    if let Some(seed) = opts.seed {
        cfg.seed = seed;
    }
    if let Some(dir) = &opts.output_dir {
        cfg.output_dir = dir.clone();
    }
    let report = execute(&cfg)?;
    let files = write_report(&report, &cfg.output_dir)?;
    Ok((report, files))
}

/// 0 when every check passed, 1 on a failed check, 2 for configuration and
/// I/O problems, 3 when a numerical routine broke down.
pub fn exit_code<T>(outcome: &Result<T>, pass: impl Fn(&T) -> bool) -> i32 {
    match outcome {
        Ok(v) if pass(v) => EXIT_PASS,
        Ok(_) => EXIT_FAIL,
        Err(e) => error_exit_code(e),
    }
}

pub fn error_exit_code(e: &Error) -> i32 {
    if e.is_numerical() || matches!(e, Error::ZeroVector) {
        EXIT_NUMERICAL
    } else {
        EXIT_CONFIG
    }
}
