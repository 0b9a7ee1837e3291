//! Self-paced curriculum training for spatio-temporal quantile forecasting.
//!
//! The crate is organised bottom-up:
//!
//! - [`numerics`]: dense tensors, Adam, finite differences and seeded random streams.
//! - [`data`]: datasets, synthetic generation, normalization, sliding windows and batching.
//! - [`loss_metrics`]: pinball loss, per-instance loss tensors, masked objectives, metrics.
//! - [`forecaster`]: linear and MLP multi-quantile forecasters with manual backpropagation.
//! - [`curriculum`]: difficulty scoring, spatial/temporal/quantile schedulers and pacing.
//! - [`fusion`]: the linear stacking layer over the three curriculum experts.
//! - [`trainer`]: vanilla, single-scheduler and fused training loops plus evaluation.
//! - [`efficiency_sim`]: batch-slot utilization simulation for instance vs. group schedulers.
//!
//! All numeric code is generic over [`Scalar`] (`f32` or `f64`); the `*64` / `*32`
//! aliases below pin the common instantiations.

pub mod curriculum;
pub mod data;
pub mod efficiency_sim;
pub mod error;
pub mod forecaster;
pub mod fusion;
pub mod loss_metrics;
pub mod numerics;
pub mod scalar;
pub mod trainer;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Tensor64 = numerics::Tensor<f64>;
pub type Tensor32 = numerics::Tensor<f32>;
pub type Dataset64 = data::STDataset<f64>;
pub type Dataset32 = data::STDataset<f32>;
pub type LossTensor64 = loss_metrics::LossTensor<f64>;
pub type ModelParams64 = forecaster::ModelParams<f64>;
pub type ModelParams32 = forecaster::ModelParams<f32>;
pub type FusionParams64 = fusion::FusionParams<f64>;
pub use trainer::TrainConfig;
pub type MetricsReport64 = loss_metrics::MetricsReport<f64>;
