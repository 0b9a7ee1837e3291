use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use stq_core::data::SyntheticConfig;
use stq_core::efficiency_sim::SimConfig;
use stq_core::forecaster::GradcheckFamily;
use stq_core::trainer::TrainConfig;

use crate::exit::{CliError, CliResult};

/// The single configuration file: one JSON object with optional sections.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub synthetic: SyntheticConfig,
    pub train: TrainConfig,
    pub sim: SimConfig,
    pub gradcheck: GradcheckConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GradcheckConfig {
    pub cases: usize,
    pub family: GradcheckFamily,
    pub tolerance: f64,
}

impl Default for GradcheckConfig {
    fn default() -> Self {
        Self {
            cases: 24,
            family: GradcheckFamily::Both,
            tolerance: 1e-4,
        }
    }
}

impl RunConfig {
    /// Reads `path`, or the defaults when no path is given.
    pub fn load(path: Option<&Path>) -> CliResult<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::io(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> CliResult<Self> {
        serde_json::from_str(text).map_err(|e| CliError::config(format!("invalid config: {e}")))
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("config serializes")
    }
}
