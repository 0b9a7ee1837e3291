use serde::{Deserialize, Serialize};

use crate::curriculum::{Direction, PaceSettings, QuantileRule, QuantileSchedule, View};
use crate::data::SplitSpec;
use crate::forecaster::{Architecture, ModelSpec, Sharing};
use crate::fusion::FusionConfig;
use crate::loss_metrics::QuantileSet;
use crate::{Error, Result, Scalar};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchedulerKind {
    #[default]
    None,
    Spatial,
    Temporal,
    Quantile,
    All,
}

impl SchedulerKind {
    pub fn view(self) -> Option<View> {
        match self {
            SchedulerKind::Spatial => Some(View::Spatial),
            SchedulerKind::Temporal => Some(View::Temporal),
            SchedulerKind::Quantile => Some(View::Quantile),
            SchedulerKind::None | SchedulerKind::All => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SchedulerKind::None => "none",
            SchedulerKind::Spatial => "spatial",
            SchedulerKind::Temporal => "temporal",
            SchedulerKind::Quantile => "quantile",
            SchedulerKind::All => "all",
        }
    }
}

impl std::str::FromStr for SchedulerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(SchedulerKind::None),
            "spatial" => Ok(SchedulerKind::Spatial),
            "temporal" => Ok(SchedulerKind::Temporal),
            "quantile" => Ok(SchedulerKind::Quantile),
            "all" => Ok(SchedulerKind::All),
            other => Err(Error::config(
                "scheduler",
                format!("unknown scheduler {other:?}; expected none|spatial|temporal|quantile|all"),
            )),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArchitectureKind {
    #[default]
    Linear,
    Mlp,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub architecture: ArchitectureKind,
    /// Hidden width; used by the MLP only.
    pub hidden: usize,
    pub t_in: usize,
    pub t_out: usize,
    pub per_node: bool,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            architecture: ArchitectureKind::Linear,
            hidden: 32,
            t_in: 12,
            t_out: 12,
            per_node: false,
        }
    }
}

impl ModelConfig {
    pub fn spec(&self, quantiles: usize, nodes: usize) -> ModelSpec {
        ModelSpec {
            architecture: match self.architecture {
                ArchitectureKind::Linear => Architecture::Linear,
                ArchitectureKind::Mlp => Architecture::Mlp { hidden: self.hidden },
            },
            t_in: self.t_in,
            t_out: self.t_out,
            quantiles,
            sharing: if self.per_node {
                Sharing::PerNode { nodes }
            } else {
                Sharing::Shared
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CurriculumConfig {
    /// Inclusion percentile after warm start (`p0`).
    pub initial_percentile: f64,
    /// Percentile increment per pace update (`Δp`).
    pub increment: f64,
    /// Pace update periods in optimizer iterations.
    pub spatial_step: u64,
    pub temporal_step: u64,
    pub quantile_step: u64,
    /// Warm-start epochs on full data (`E0`).
    pub warm_start_epochs: usize,
    pub spatial_direction: Direction,
    pub temporal_direction: Direction,
    pub quantile_direction: Direction,
    pub quantile_rule: QuantileRule,
    /// Train every head at its target level from the start.
    pub pin_quantile_schedule: bool,
}

impl Default for CurriculumConfig {
    fn default() -> Self {
        Self {
            initial_percentile: 30.0,
            increment: 10.0,
            spatial_step: 300,
            temporal_step: 300,
            quantile_step: 300,
            warm_start_epochs: 5,
            spatial_direction: Direction::EasyToHard,
            temporal_direction: Direction::EasyToHard,
            quantile_direction: Direction::HardToEasy,
            quantile_rule: QuantileRule::LevelSchedule,
            pin_quantile_schedule: false,
        }
    }
}

impl CurriculumConfig {
    pub fn settings<S: Scalar>(&self, target: &[S]) -> PaceSettings<S> {
        PaceSettings {
            initial_percentile: self.initial_percentile,
            increment: self.increment,
            step_sizes: [self.spatial_step, self.temporal_step, self.quantile_step],
            directions: [self.spatial_direction, self.temporal_direction, self.quantile_direction],
            schedule: if self.pin_quantile_schedule {
                QuantileSchedule::pinned(target)
            } else {
                QuantileSchedule::for_direction(self.quantile_direction, target)
            },
            rule: self.quantile_rule,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=100.0).contains(&self.initial_percentile) {
            return Err(Error::config("curriculum.initial_percentile", "must be in [0, 100]"));
        }
        if !(self.increment > 0.0 && self.increment.is_finite()) {
            return Err(Error::config("curriculum.increment", "must be positive"));
        }
        for (field, mu) in [
            ("curriculum.spatial_step", self.spatial_step),
            ("curriculum.temporal_step", self.temporal_step),
            ("curriculum.quantile_step", self.quantile_step),
        ] {
            if mu == 0 {
                return Err(Error::config(field, "must be at least 1"));
            }
        }
        Ok(())
    }
}

/// Everything a training run needs besides the data.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub model: ModelConfig,
    pub quantiles: Vec<f64>,
    pub learning_rate: f64,
    /// Epoch budget, warm-start epochs included.
    pub max_epochs: usize,
    pub patience: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub scheduler: SchedulerKind,
    pub curriculum: CurriculumConfig,
    pub split: SplitSpec,
    /// 1-based output steps reported in the metrics.
    pub horizons: Vec<usize>,
    pub fusion: FusionConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            model: ModelConfig::default(),
            quantiles: vec![0.1, 0.5, 0.9],
            learning_rate: 1e-3,
            max_epochs: 100,
            patience: 10,
            batch_size: 32,
            seed: 0,
            scheduler: SchedulerKind::None,
            curriculum: CurriculumConfig::default(),
            split: SplitSpec::default(),
            horizons: vec![3, 6, 12],
            fusion: FusionConfig::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        QuantileSet::new(self.quantiles.clone()).map_err(|e| Error::config("quantiles", e.to_string()))?;
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::config("learning_rate", "must be positive"));
        }
        for (field, v) in [
            ("max_epochs", self.max_epochs),
            ("patience", self.patience),
            ("batch_size", self.batch_size),
            ("model.t_in", self.model.t_in),
            ("model.t_out", self.model.t_out),
        ] {
            if v == 0 {
                return Err(Error::config(field, "must be at least 1"));
            }
        }
        if self.model.architecture == ArchitectureKind::Mlp && self.model.hidden == 0 {
            return Err(Error::config("model.hidden", "must be at least 1"));
        }
        if let Some(&h) = self.horizons.iter().find(|&&h| h == 0 || h > self.model.t_out) {
            return Err(Error::config(
                "horizons",
                format!("horizon {h} outside 1..={}", self.model.t_out),
            ));
        }
        self.split.validate()?;
        self.curriculum.validate()?;
        self.fusion.validate()
    }

    pub fn quantile_set<S: Scalar>(&self) -> Result<QuantileSet<S>> {
        QuantileSet::new(self.quantiles.iter().map(|&a| S::lit(a)).collect())
    }
}
