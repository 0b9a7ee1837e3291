use std::ops::Range;

use serde::{Deserialize, Serialize};

use super::STDataset;
use crate::numerics::Tensor;
use crate::{Error, Result, Scalar};

pub const STD_FLOOR: f64 = 1e-8;

/// Per-node mean and (floored) population standard deviation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormStats<S> {
    pub mean: Vec<S>,
    pub std: Vec<S>,
}

impl<S: Scalar> NormStats<S> {
    pub fn len(&self) -> usize {
        self.mean.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mean.is_empty()
    }
}

/// Fits statistics on `rows` (the training region) only.
pub fn zscore_fit<S: Scalar>(dataset: &STDataset<S>, rows: Range<usize>) -> Result<NormStats<S>> {
    if rows.is_empty() || rows.end > dataset.num_steps() {
        return Err(Error::Contract(format!(
            "normalization rows {rows:?} outside 0..{}",
            dataset.num_steps()
        )));
    }
    let n = dataset.num_nodes();
    let count = S::from_usize_lossy(rows.len());
    let floor = S::lit(STD_FLOOR);
    let mut mean = Vec::with_capacity(n);
    let mut std = Vec::with_capacity(n);
    for node in 0..n {
        let mut acc = S::zero();
        for t in rows.clone() {
            acc = acc + dataset.value(t, node);
        }
        let m = acc / count;
        let mut var = S::zero();
        for t in rows.clone() {
            let d = dataset.value(t, node) - m;
            var = var + d * d;
        }
        let s = (var / count).sqrt();
        mean.push(m);
        std.push(if s > floor { s } else { floor });
    }
    Ok(NormStats { mean, std })
}

pub fn zscore_apply<S: Scalar>(dataset: &STDataset<S>, stats: &NormStats<S>) -> Result<STDataset<S>> {
    let n = dataset.num_nodes();
    if stats.len() != n || stats.std.len() != n {
        return Err(Error::shape("normalization stats", &[n], &[stats.len()]));
    }
    let values: Vec<S> = dataset
        .values()
        .values()
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let node = i % n;
            (v - stats.mean[node]) / stats.std[node]
        })
        .collect();
    Ok(dataset.with_values(Tensor::from_vec(dataset.values().shape(), values)?, Some(stats.clone())))
}

/// Maps normalized values back to original units; `node_axis` names the tensor
/// axis that indexes nodes.
pub fn zscore_invert<S: Scalar>(values: &Tensor<S>, stats: &NormStats<S>, node_axis: usize) -> Result<Tensor<S>> {
    let shape = values.shape();
    if node_axis >= shape.len() || shape[node_axis] != stats.len() {
        return Err(Error::Contract(format!(
            "axis {node_axis} of {shape:?} does not match {} normalized nodes",
            stats.len()
        )));
    }
    let inner: usize = shape[node_axis + 1..].iter().product();
    let n = stats.len();
    let out = values
        .values()
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let node = (i / inner) % n;
            v * stats.std[node] + stats.mean[node]
        })
        .collect();
    Tensor::from_vec(shape, out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dataset(values: Vec<f64>, n: usize) -> STDataset<f64> {
        let t = values.len() / n;
        STDataset::new(
            Tensor::from_vec(&[t, n], values).unwrap(),
            (0..n).map(|i| i.to_string()).collect(),
            (0..t).map(|i| i.to_string()).collect(),
            5,
        )
        .unwrap()
    }

    #[test]
    fn constant_node_maps_to_zero() {
        let d = dataset(vec![3.0, 1.0, 3.0, 2.0, 3.0, 6.0], 2);
        let stats = zscore_fit(&d, 0..3).unwrap();
        assert_eq!(stats.std[0], STD_FLOOR);
        let z = zscore_apply(&d, &stats).unwrap();
        assert!((0..3).all(|t| z.value(t, 0) == 0.0));
    }

    #[test]
    fn training_region_is_centered_and_round_trips() {
        let vals: Vec<f64> = (0..60).map(|i| ((i * 37) % 11) as f64 * 1.7 - 4.0).collect();
        let d = dataset(vals, 3);
        let stats = zscore_fit(&d, 0..12).unwrap();
        let z = zscore_apply(&d, &stats).unwrap();
        for node in 0..3 {
            let m: f64 = (0..12).map(|t| z.value(t, node)).sum::<f64>() / 12.0;
            assert!(m.abs() < 1e-10);
        }
        let back = zscore_invert(z.values(), &stats, 1).unwrap();
        for (a, b) in back.values().iter().zip(d.values().values()) {
            assert!((a - b).abs() < 1e-12);
        }
        assert_eq!(z.stats(), Some(&stats));
    }

    #[test]
    fn wrong_length_stats_rejected() {
        let d = dataset(vec![1.0, 2.0, 3.0, 4.0], 2);
        let stats = NormStats {
            mean: vec![0.0; 3],
            std: vec![1.0; 3],
        };
        assert!(zscore_apply(&d, &stats).is_err());
        assert!(zscore_invert(d.values(), &stats, 1).is_err());
    }

    #[test]
    fn invert_on_prediction_layout() {
        let stats = NormStats {
            mean: vec![10.0, 20.0],
            std: vec![2.0, 4.0],
        };
        // [W=1, T=1, N=2, Q=2]
        let p = Tensor::from_vec(&[1, 1, 2, 2], vec![0.0, 1.0, -1.0, 0.5]).unwrap();
        let back = zscore_invert(&p, &stats, 2).unwrap();
        assert_eq!(back.values(), &[10.0, 12.0, 16.0, 22.0]);
    }
}
