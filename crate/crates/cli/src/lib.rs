//! Batch experiment harness around the `circlesum` library.
//!
//! A run reads one TOML config, validates it completely, executes the
//! command on a fixed-size worker pool and writes `<prefix>.csv` plus a
//! `<prefix>.json` manifest.

pub mod commands;
pub mod config;
pub mod grid;

use chrono::{SecondsFormat, Utc};
use config::{Diagnostic, ExperimentConfig};
use serde::Serialize;
use std::path::{Path, PathBuf};

pub use grid::alpha_grid;

/// Why a run stopped; maps onto the process exit status.
#[derive(Debug, thiserror::Error)]
pub enum Failure {
    #[error("{0}")]
    Validation(Diagnostic),
    #[error("budget exhausted: {0}")]
    Budget(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Validation(_) => 1,
            Failure::Budget(_) => 2,
        }
    }
}

impl From<circlesum::Error> for Failure {
    fn from(e: circlesum::Error) -> Self {
        if e.is_budget() {
            Failure::Budget(e.to_string())
        } else {
            Failure::Validation(Diagnostic::new(None, e.to_string()))
        }
    }
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub artifact: &'static str,
    pub version: &'static str,
    pub command: String,
    pub config_path: String,
    pub config: serde_json::Value,
    pub started: String,
    pub finished: String,
    pub workers: usize,
    pub exit_status: i32,
    pub csv: String,
    pub summary: serde_json::Value,
    pub warnings: Vec<String>,
}

/// Where the files of a finished run went.
#[derive(Debug)]
pub struct Outcome {
    pub csv_path: PathBuf,
    pub json_path: PathBuf,
    pub manifest: RunManifest,
}

impl Outcome {
    /// 0, or 2 when a budget cut the run short after the files were written.
    pub fn exit_code(&self) -> i32 {
        self.manifest.exit_status
    }
}

pub struct RunRequest<'a> {
    pub command: Option<&'a str>,
    pub config_path: &'a Path,
    pub workers: Option<usize>,
    pub out: Option<&'a Path>,
}

fn default_workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

fn with_suffix(prefix: &Path, ext: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_os_string();
    s.push(".");
    s.push(ext);
    PathBuf::from(s)
}

/// Parses, validates and executes one run. `workers` has already been
/// resolved from the command line and environment.
pub fn run(req: &RunRequest) -> Result<Outcome, Failure> {
    let started = Utc::now();
    let text = std::fs::read_to_string(req.config_path).map_err(|e| {
        Failure::Validation(Diagnostic::new(None, format!("cannot read {}: {e}", req.config_path.display())))
    })?;
    let cfg = ExperimentConfig::parse(&text, req.command).map_err(Failure::Validation)?;
    let workers = req.workers.or(cfg.params.workers).unwrap_or_else(default_workers);
    if workers == 0 {
        return Err(Failure::Validation(Diagnostic::new(None, "worker count must be at least 1")));
    }
    let prefix = match (req.out, &cfg.prefix) {
        (Some(p), _) => p.to_path_buf(),
        (None, Some(p)) => p.clone(),
        (None, None) => req.config_path.with_extension(""),
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Failure::Validation(Diagnostic::new(None, e.to_string())))?;
    let report = pool.install(|| commands::dispatch(&cfg))?;

    let io = |e: std::io::Error| Failure::Validation(Diagnostic::new(None, format!("cannot write output: {e}")));
    if let Some(dir) = prefix.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(io)?;
    }
    let csv_path = with_suffix(&prefix, "csv");
    let json_path = with_suffix(&prefix, "json");
    std::fs::write(&csv_path, &report.csv).map_err(io)?;
    let manifest = RunManifest {
        artifact: "circlesum",
        version: env!("CARGO_PKG_VERSION"),
        command: cfg.command.to_string(),
        config_path: req.config_path.display().to_string(),
        config: cfg.echo.clone(),
        started: started.to_rfc3339_opts(SecondsFormat::Millis, true),
        finished: Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true),
        workers,
        exit_status: if report.budget_exhausted { 2 } else { 0 },
        csv: csv_path.display().to_string(),
        summary: report.summary,
        warnings: report.warnings,
    };
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    std::fs::write(&json_path, json + "\n").map_err(io)?;
    Ok(Outcome { csv_path, json_path, manifest })
}
