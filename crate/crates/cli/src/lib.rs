//! Batch front end for the optomechanical lasing experiments: config
//! parsing, the experiment kinds, a worker pool over sweep points, and CSV
//! and JSON output.

pub mod config;
pub mod experiments;
pub mod output;
pub mod pool;

use std::path::{Path, PathBuf};

pub use config::{parse_config, parse_config_str, ConfigError, ExperimentConfig, Kind};
pub use experiments::run_experiment;
use output::{unix_now, PointSummary, RunManifest};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("cannot write {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("cannot write {path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub manifest: PathBuf,
    pub files: Vec<PathBuf>,
    pub total: usize,
    pub failed: usize,
}

impl RunSummary {
    /// 0 when every point succeeded, 2 otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.failed == 0 {
            0
        } else {
            2
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> RunError + '_ {
    move |source| RunError::Io { path: path.to_path_buf(), source }
}

/// Result file name for a table suffix.
pub fn table_file(kind: Kind, suffix: &str) -> String {
    if suffix.is_empty() {
        format!("{kind}.csv")
    } else {
        format!("{kind}_{suffix}.csv")
    }
}

/// Runs the experiment into `cfg.output.dir`: the manifest is written first
/// with status `running`, then the result tables, then the final manifest.
pub fn run(cfg: &ExperimentConfig, jobs: usize) -> Result<RunSummary, RunError> {
    let dir = &cfg.output.dir;
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    let manifest_path = dir.join(format!("{}.manifest.json", cfg.kind));
    let mut manifest = RunManifest {
        artifact: env!("CARGO_PKG_NAME"),
        version: VERSION,
        kind: cfg.kind.to_string(),
        status: "running",
        config: serde_json::to_value(cfg).expect("config serializes"),
        jobs,
        started_unix: unix_now(),
        finished_unix: None,
        files: Vec::new(),
        summary: None,
        points: Vec::new(),
    };
    manifest.write(&manifest_path).map_err(io_err(&manifest_path))?;

    let out = run_experiment(cfg, jobs);
    let mut files = Vec::new();
    for (suffix, table) in &out.tables {
        let path = dir.join(table_file(cfg.kind, suffix));
        table.write(&path).map_err(|source| RunError::Csv { path: path.clone(), source })?;
        files.push(path);
    }
    let failed = out.points.iter().filter(|p| !p.is_ok()).count();
    let total = out.points.len();
    manifest.status = "finished";
    manifest.finished_unix = Some(unix_now());
    manifest.files = files.iter().map(|f| PathBuf::from(f.file_name().expect("file name"))).collect();
    manifest.summary = Some(PointSummary { total, ok: total - failed, failed });
    manifest.points = out.points;
    manifest.write(&manifest_path).map_err(io_err(&manifest_path))?;
    Ok(RunSummary { manifest: manifest_path, files, total, failed })
}
