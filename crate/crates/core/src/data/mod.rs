//! Spatio-temporal datasets: CSV ingestion, synthetic generation with planted
//! difficulty, z-score normalization, sliding windows, chronological splits and
//! stratified batching.

mod batch;
mod csv;
mod normalize;
mod synthetic;
mod window;

pub use batch::{stratified_batches, Batch};
pub use csv::{load_csv, read_csv, write_csv, write_csv_string};
pub use normalize::{zscore_apply, zscore_fit, zscore_invert, NormStats, STD_FLOOR};
pub use synthetic::{generate_synthetic, generate_synthetic_with_truth, SyntheticConfig, SyntheticOutput};
pub use window::{make_windows, split, SplitSpec, Splits, WindowSample};

use crate::numerics::Tensor;
use crate::{Error, Result, Scalar};

/// Time-major `[T_total, N]` matrix of sensor readings.
#[derive(Clone, Debug, PartialEq)]
pub struct STDataset<S> {
    values: Tensor<S>,
    node_ids: Vec<String>,
    timestamps: Vec<String>,
    interval_minutes: u32,
    stats: Option<NormStats<S>>,
}

impl<S: Scalar> STDataset<S> {
    pub fn new(values: Tensor<S>, node_ids: Vec<String>, timestamps: Vec<String>, interval_minutes: u32) -> Result<Self> {
        let &[steps, nodes] = values.shape() else {
            return Err(Error::Contract(format!("dataset values must be [T, N], got {:?}", values.shape())));
        };
        if nodes == 0 {
            return Err(Error::Contract("dataset needs at least one node".into()));
        }
        if node_ids.len() != nodes {
            return Err(Error::shape("dataset node ids", &[nodes], &[node_ids.len()]));
        }
        if timestamps.len() != steps {
            return Err(Error::shape("dataset timestamps", &[steps], &[timestamps.len()]));
        }
        Ok(Self {
            values,
            node_ids,
            timestamps,
            interval_minutes,
            stats: None,
        })
    }

    pub fn num_steps(&self) -> usize {
        self.values.shape()[0]
    }

    pub fn num_nodes(&self) -> usize {
        self.values.shape()[1]
    }

    pub fn values(&self) -> &Tensor<S> {
        &self.values
    }

    pub fn node_ids(&self) -> &[String] {
        &self.node_ids
    }

    pub fn timestamps(&self) -> &[String] {
        &self.timestamps
    }

    pub fn interval_minutes(&self) -> u32 {
        self.interval_minutes
    }

    /// Normalization statistics, present once [`zscore_apply`] produced this dataset.
    pub fn stats(&self) -> Option<&NormStats<S>> {
        self.stats.as_ref()
    }

    #[inline]
    pub fn value(&self, step: usize, node: usize) -> S {
        self.values.values()[step * self.num_nodes() + node]
    }

    /// The window anchored at `anchor`: input rows `anchor+1-T_in ..= anchor`,
    /// target rows `anchor+1 ..= anchor+T_out`, all nodes.
    pub fn window(&self, anchor: usize, t_in: usize, t_out: usize) -> Result<WindowSample<S>> {
        let nodes: Vec<usize> = (0..self.num_nodes()).collect();
        let (input, target) = self.gather(&[anchor], &nodes, t_in, t_out)?;
        Ok(WindowSample {
            anchor,
            input: input.reshape(&[t_in, nodes.len()])?,
            target: target.reshape(&[t_out, nodes.len()])?,
        })
    }

    /// Stacks windows into `[B, T_in, n]` inputs and `[B, T_out, n]` targets over
    /// the given node columns.
    pub fn gather(&self, anchors: &[usize], nodes: &[usize], t_in: usize, t_out: usize) -> Result<(Tensor<S>, Tensor<S>)> {
        let n_all = self.num_nodes();
        if let Some(&bad) = nodes.iter().find(|&&n| n >= n_all) {
            return Err(Error::Contract(format!("node {bad} out of range for {n_all} nodes")));
        }
        let steps = self.num_steps();
        let mut input = Vec::with_capacity(anchors.len() * t_in * nodes.len());
        let mut target = Vec::with_capacity(anchors.len() * t_out * nodes.len());
        let v = self.values.values();
        for &anchor in anchors {
            if anchor + 1 < t_in || anchor + t_out >= steps {
                return Err(Error::Contract(format!(
                    "window anchored at {anchor} does not fit {steps} steps with T_in={t_in}, T_out={t_out}"
                )));
            }
            for t in anchor + 1 - t_in..=anchor {
                input.extend(nodes.iter().map(|&n| v[t * n_all + n]));
            }
            for t in anchor + 1..=anchor + t_out {
                target.extend(nodes.iter().map(|&n| v[t * n_all + n]));
            }
        }
        Ok((
            Tensor::from_vec(&[anchors.len(), t_in, nodes.len()], input)?,
            Tensor::from_vec(&[anchors.len(), t_out, nodes.len()], target)?,
        ))
    }

    pub(crate) fn with_values(&self, values: Tensor<S>, stats: Option<NormStats<S>>) -> Self {
        Self {
            values,
            node_ids: self.node_ids.clone(),
            timestamps: self.timestamps.clone(),
            interval_minutes: self.interval_minutes,
            stats,
        }
    }
}
