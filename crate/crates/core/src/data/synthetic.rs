use std::f64::consts::PI;
use std::ops::Range;

use serde::{Deserialize, Serialize};

use super::STDataset;
use crate::numerics::{RandomStream, Tensor};
use crate::{Error, Result, Scalar};

/// Periodic multi-node series with planted hard nodes (extra noise) and hard time
/// spans (additive regime shifts shared by all nodes).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticConfig {
    pub nodes: usize,
    pub steps: usize,
    /// Length of one daily cycle in steps.
    pub period: usize,
    pub amplitude: f64,
    pub offset: f64,
    pub noise_std: f64,
    pub hard_node_fraction: f64,
    pub hard_node_noise: f64,
    pub hard_time_fraction: f64,
    pub shift_magnitude: f64,
    /// Steps per regime-shift span.
    pub shift_span: usize,
    pub interval_minutes: u32,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            nodes: 20,
            steps: 4000,
            period: 288,
            amplitude: 50.0,
            offset: 200.0,
            noise_std: 5.0,
            hard_node_fraction: 0.2,
            hard_node_noise: 4.0,
            hard_time_fraction: 0.1,
            shift_magnitude: 40.0,
            shift_span: 24,
            interval_minutes: 5,
            seed: 0,
        }
    }
}

impl SyntheticConfig {
    pub fn validate(&self) -> Result<()> {
        if self.nodes == 0 {
            return Err(Error::config("synthetic.nodes", "must be at least 1"));
        }
        if self.steps == 0 {
            return Err(Error::config("synthetic.steps", "must be at least 1"));
        }
        if self.period == 0 {
            return Err(Error::config("synthetic.period", "must be at least 1"));
        }
        if self.shift_span == 0 {
            return Err(Error::config("synthetic.shift_span", "must be at least 1"));
        }
        for (field, f) in [
            ("synthetic.hard_node_fraction", self.hard_node_fraction),
            ("synthetic.hard_time_fraction", self.hard_time_fraction),
        ] {
            if !(0.0..=1.0).contains(&f) {
                return Err(Error::config(field, format!("{f} is not in [0, 1]")));
            }
        }
        if !(self.hard_node_noise >= 1.0) {
            return Err(Error::config("synthetic.hard_node_noise", "multiplier must be >= 1"));
        }
        for (field, v) in [
            ("synthetic.amplitude", self.amplitude),
            ("synthetic.offset", self.offset),
            ("synthetic.shift_magnitude", self.shift_magnitude),
        ] {
            if !v.is_finite() {
                return Err(Error::config(field, "must be finite"));
            }
        }
        if !(self.noise_std >= 0.0 && self.noise_std.is_finite()) {
            return Err(Error::config("synthetic.noise_std", "must be finite and >= 0"));
        }
        Ok(())
    }
}

/// Generated dataset plus the planted ground truth.
#[derive(Clone, Debug)]
pub struct SyntheticOutput<S> {
    pub dataset: STDataset<S>,
    /// Noise-free component (periodic signal plus regime shifts), `[T, N]`.
    pub signal: Tensor<f64>,
    pub hard_nodes: Vec<usize>,
    pub shifted_spans: Vec<Range<usize>>,
}

pub fn generate_synthetic<S: Scalar>(cfg: &SyntheticConfig) -> Result<STDataset<S>> {
    Ok(generate_synthetic_with_truth(cfg)?.dataset)
}

pub fn generate_synthetic_with_truth<S: Scalar>(cfg: &SyntheticConfig) -> Result<SyntheticOutput<S>> {
    cfg.validate()?;
    let root = RandomStream::new(cfg.seed);
    let (n, steps) = (cfg.nodes, cfg.steps);

    let mut layout = root.derive("synthetic/layout");
    let phases: Vec<f64> = (0..n).map(|_| layout.uniform_range(0.0, 2.0 * PI)).collect();
    let hard_count = (cfg.hard_node_fraction * n as f64).round() as usize;
    let hard_nodes = layout.choose_indices(n, hard_count);

    let blocks = steps / cfg.shift_span;
    let span_count = ((cfg.hard_time_fraction * steps as f64) / cfg.shift_span as f64).round() as usize;
    let shifted_spans: Vec<Range<usize>> = if cfg.shift_magnitude == 0.0 {
        Vec::new()
    } else {
        layout
            .choose_indices(blocks, span_count.min(blocks))
            .into_iter()
            .map(|b| b * cfg.shift_span..(b + 1) * cfg.shift_span)
            .collect()
    };
    let signs: Vec<f64> = shifted_spans
        .iter()
        .map(|_| if layout.bernoulli(0.5) { 1.0 } else { -1.0 })
        .collect();
    let mut shift = vec![0.0; steps];
    for (span, sign) in shifted_spans.iter().zip(&signs) {
        for s in &mut shift[span.clone()] {
            *s = sign * cfg.shift_magnitude;
        }
    }

    let mut noise = root.derive("synthetic/noise");
    let mut signal = Vec::with_capacity(steps * n);
    let mut values = Vec::with_capacity(steps * n);
    for (t, &level_shift) in shift.iter().enumerate() {
        let angle = 2.0 * PI * t as f64 / cfg.period as f64;
        for (node, &phase) in phases.iter().enumerate() {
            let clean = cfg.amplitude * (angle + phase).sin() + cfg.offset + level_shift;
            let scale = if hard_nodes.binary_search(&node).is_ok() {
                cfg.noise_std * cfg.hard_node_noise
            } else {
                cfg.noise_std
            };
            signal.push(clean);
            values.push(S::lit(clean + scale * noise.normal()));
        }
    }

    let dataset = STDataset::new(
        Tensor::from_vec(&[steps, n], values)?,
        (0..n).map(|i| format!("node{i:03}")).collect(),
        (0..steps).map(|t| (t as u64 * cfg.interval_minutes as u64).to_string()).collect(),
        cfg.interval_minutes,
    )?;
    Ok(SyntheticOutput {
        dataset,
        signal: Tensor::from_vec(&[steps, n], signal)?,
        hard_nodes,
        shifted_spans,
    })
}
