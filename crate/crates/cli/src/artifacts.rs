use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use stq_core::trainer::{RunReport, Trained};

use crate::config::RunConfig;
use crate::exit::{CliError, CliResult};

pub const OUTPUT_ROOT_ENV: &str = "STQ_OUTPUT_ROOT";

/// Directory for a run: `--out` if given, else `$STQ_OUTPUT_ROOT/<name>` (default root `runs`).
pub fn resolve_out(out: Option<&Path>, default_name: &str) -> PathBuf {
    match out {
        Some(p) => p.to_path_buf(),
        None => {
            let root = std::env::var_os(OUTPUT_ROOT_ENV).map_or_else(|| PathBuf::from("runs"), PathBuf::from);
            root.join(default_name)
        }
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn write(path: &Path, contents: impl AsRef<[u8]>) -> CliResult<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| CliError::io(format!("cannot create {}: {e}", parent.display())))?;
    }
    fs::write(path, contents).map_err(|e| CliError::io(format!("cannot write {}: {e}", path.display())))
}

pub fn write_json(path: &Path, value: &impl Serialize) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).expect("serializable value");
    text.push('\n');
    write(path, text)
}

/// Everything needed to reproduce a run's outputs.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub config: Value,
    pub seeds: Vec<u64>,
    pub dataset: Value,
}

impl RunManifest {
    pub fn new(command: &'static str, config: &RunConfig, seeds: Vec<u64>, dataset: Value) -> Self {
        Self {
            tool: "stq",
            version: env!("CARGO_PKG_VERSION"),
            command,
            config: config.to_json(),
            seeds,
            dataset,
        }
    }
}

/// Writes the run directory of a `train` invocation.
pub fn write_run(dir: &Path, manifest: &RunManifest, trained: &Trained<f64>, report: &RunReport<f64>) -> CliResult<()> {
    write_json(&dir.join("config.json"), manifest)?;
    write(&dir.join("losses.csv"), report.losses_csv())?;
    write(&dir.join("pace_trace.csv"), report.pace_csv())?;
    write_json(&dir.join("metrics.json"), &report.metrics.to_json())?;
    write(&dir.join("metrics.csv"), report.metrics.to_csv())?;
    let ckpt = dir.join("checkpoints");
    match trained {
        Trained::Single(p) => write_json(&ckpt.join("model.json"), &p.to_checkpoint())?,
        Trained::Ensemble(e) => {
            for (name, p) in ["spatial", "temporal", "quantile"].iter().zip(&e.experts) {
                write_json(&ckpt.join(format!("expert_{name}.json")), &p.to_checkpoint())?;
            }
            write_json(&ckpt.join("fusion.json"), &e.fusion.to_checkpoint())?;
        }
    }
    let summary = json!({
        "scheduler": report.scheduler,
        "best_epoch": report.best_epoch(),
        "epochs": report.histories.iter().map(|h| h.epochs()).collect::<Vec<_>>(),
        "val_qloss": report.val_qloss,
        "test_qloss": report.test_qloss,
        "fusion": report.fusion,
    });
    write_json(&dir.join("summary.json"), &summary)?;
    write_json(&dir.join("timing.json"), &json!({ "wall_time_secs": report.wall_time_secs }))
}
