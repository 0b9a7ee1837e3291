//! Linear stacking of the three expert forecasts.

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::loss_metrics::{mean_quantile_loss, pinball_grad};
use crate::numerics::{AdamConfig, AdamState, RandomStream, Tensor};
use crate::{Error, Result, Scalar};

pub const EXPERTS: usize = 3;

/// `Z = W · concat(O_s, O_t, O_q) + b`, shared across every `(t, n)` position.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FusionParams<S> {
    /// `[Q, 3Q]`
    pub weight: Tensor<S>,
    /// `[Q]`
    pub bias: Tensor<S>,
}

impl<S: Scalar> FusionParams<S> {
    pub fn new(weight: Tensor<S>, bias: Tensor<S>) -> Result<Self> {
        let q = bias.len();
        bias.expect_shape("fusion bias", &[q])?;
        weight.expect_shape("fusion weight", &[q, EXPERTS * q])?;
        Ok(Self { weight, bias })
    }

    /// Passes expert `expert` through unchanged.
    pub fn selector(q: usize, expert: usize) -> Self {
        assert!(expert < EXPERTS, "expert index out of range");
        let mut weight = Tensor::zeros(&[q, EXPERTS * q]);
        for k in 0..q {
            weight.set(&[k, expert * q + k], S::one());
        }
        Self {
            weight,
            bias: Tensor::zeros(&[q]),
        }
    }

    /// Elementwise mean of the experts.
    pub fn average(q: usize) -> Self {
        let third = S::one() / S::lit(EXPERTS as f64);
        let mut weight = Tensor::zeros(&[q, EXPERTS * q]);
        for k in 0..q {
            for e in 0..EXPERTS {
                weight.set(&[k, e * q + k], third);
            }
        }
        Self {
            weight,
            bias: Tensor::zeros(&[q]),
        }
    }

    pub fn quantiles(&self) -> usize {
        self.bias.len()
    }

    fn flat(&self) -> Vec<S> {
        self.weight.values().iter().chain(self.bias.values()).copied().collect()
    }

    fn from_flat(q: usize, flat: &[S]) -> Result<Self> {
        let split = q * EXPERTS * q;
        Self::new(
            Tensor::from_vec(&[q, EXPERTS * q], flat[..split].to_vec())?,
            Tensor::from_vec(&[q], flat[split..].to_vec())?,
        )
    }

    pub fn to_checkpoint(&self) -> Value {
        let f = |t: &Tensor<S>| t.values().iter().map(|v| v.as_f64()).collect::<Vec<_>>();
        json!({
            "version": 1,
            "layers": [
                { "name": "fusion.weight", "shape": self.weight.shape(), "values": f(&self.weight) },
                { "name": "fusion.bias", "shape": self.bias.shape(), "values": f(&self.bias) },
            ]
        })
    }

    pub fn from_checkpoint(value: &Value) -> Result<Self> {
        let layer = |i: usize| -> Result<Tensor<S>> {
            let bad = || Error::Parse {
                line: 0,
                message: format!("fusion checkpoint: malformed layer {i}"),
            };
            let l = &value["layers"][i];
            let shape: Vec<usize> = serde_json::from_value(l["shape"].clone()).map_err(|_| bad())?;
            let vals: Vec<f64> = serde_json::from_value(l["values"].clone()).map_err(|_| bad())?;
            Tensor::from_vec(&shape, vals.into_iter().map(S::lit).collect())
        };
        Self::new(layer(0)?, layer(1)?)
    }
}

fn check_experts<S: Scalar>(experts: [&Tensor<S>; EXPERTS], q: usize) -> Result<()> {
    let shape = experts[0].shape();
    for e in &experts[1..] {
        if e.shape() != shape {
            return Err(Error::shape("fusion expert outputs", shape, e.shape()));
        }
    }
    if shape.last() != Some(&q) {
        return Err(Error::Contract(format!(
            "expert outputs must end in a quantile axis of {q}, got {shape:?}"
        )));
    }
    Ok(())
}

/// Fuses expert outputs of any shape whose last axis is the quantile axis.
pub fn fuse<S: Scalar>(
    spatial: &Tensor<S>,
    temporal: &Tensor<S>,
    quantile: &Tensor<S>,
    params: &FusionParams<S>,
) -> Result<Tensor<S>> {
    let q = params.quantiles();
    let experts = [spatial, temporal, quantile];
    check_experts(experts, q)?;
    let positions = spatial.len() / q;
    let w = params.weight.values();
    let b = params.bias.values();
    let mut out = vec![S::zero(); spatial.len()];
    let mut x = vec![S::zero(); EXPERTS * q];
    for p in 0..positions {
        gather_position(experts, p, q, &mut x);
        for k in 0..q {
            out[p * q + k] = dot(&w[k * EXPERTS * q..(k + 1) * EXPERTS * q], &x) + b[k];
        }
    }
    Tensor::from_vec(spatial.shape(), out)
}

#[inline]
fn gather_position<S: Scalar>(experts: [&Tensor<S>; EXPERTS], p: usize, q: usize, x: &mut [S]) {
    for (e, t) in experts.iter().enumerate() {
        x[e * q..(e + 1) * q].copy_from_slice(&t.values()[p * q..(p + 1) * q]);
    }
}

#[inline]
fn dot<S: Scalar>(a: &[S], b: &[S]) -> S {
    a.iter().zip(b).fold(S::zero(), |acc, (&x, &y)| acc + x * y)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FusionConfig {
    pub learning_rate: f64,
    pub max_epochs: usize,
    pub patience: usize,
    /// Positions per mini-batch.
    pub batch_size: usize,
}

impl Default for FusionConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            max_epochs: 50,
            patience: 10,
            batch_size: 4096,
        }
    }
}

impl FusionConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::config("fusion.learning_rate", "must be positive"));
        }
        if self.batch_size == 0 {
            return Err(Error::config("fusion.batch_size", "must be at least 1"));
        }
        if self.patience == 0 {
            return Err(Error::config("fusion.patience", "must be at least 1"));
        }
        Ok(())
    }
}

/// Expert predictions `[W, T_out, N, Q]` and targets `[W, T_out, N]` of one split.
#[derive(Clone, Copy, Debug)]
pub struct FusionSplit<'a, S> {
    pub experts: [&'a Tensor<S>; EXPERTS],
    pub targets: &'a Tensor<S>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FusionFit<S> {
    pub params: FusionParams<S>,
    /// Validation Q-loss per epoch; entry 0 is the initial selector.
    pub val_history: Vec<S>,
    pub best_epoch: usize,
    /// Expert the selector was initialised at.
    pub initial_expert: usize,
}

/// Validation Q-loss of each expert alone.
pub fn expert_losses<S: Scalar>(split: FusionSplit<'_, S>, levels: &[S]) -> Result<[S; EXPERTS]> {
    let mut out = [S::zero(); EXPERTS];
    for (o, e) in out.iter_mut().zip(split.experts) {
        *o = mean_quantile_loss(e, split.targets, levels)?;
    }
    Ok(out)
}

fn fused_loss<S: Scalar>(params: &FusionParams<S>, split: FusionSplit<'_, S>, levels: &[S]) -> Result<S> {
    let [s, t, q] = split.experts;
    mean_quantile_loss(&fuse(s, t, q, params)?, split.targets, levels)
}

/// Trains the fusion layer on frozen expert outputs.
///
/// Starts from the selector of the expert with the lowest validation loss,
/// minimises mean pinball on `train` with mini-batch Adam over positions and
/// restores the epoch with the lowest validation loss (the start counts as
/// epoch 0), so the result is never worse on validation than the best expert.
pub fn train_fusion<S: Scalar>(
    train: FusionSplit<'_, S>,
    val: FusionSplit<'_, S>,
    levels: &[S],
    config: &FusionConfig,
    stream: &mut RandomStream,
) -> Result<FusionFit<S>> {
    config.validate()?;
    let q = levels.len();
    check_experts(train.experts, q)?;
    check_experts(val.experts, q)?;
    let positions = train.targets.len();
    if positions * q != train.experts[0].len() {
        return Err(Error::shape("fusion targets", &[train.experts[0].len() / q], &[positions]));
    }
    if positions == 0 {
        return Err(Error::EmptySplit { which: "train" });
    }

    let val_experts = expert_losses(val, levels)?;
    let initial_expert = (0..EXPERTS)
        .min_by(|&a, &b| val_experts[a].partial_cmp(&val_experts[b]).expect("finite losses"))
        .expect("three experts");
    let mut params = FusionParams::selector(q, initial_expert);
    let mut best = params.clone();
    let mut best_loss = fused_loss(&params, val, levels)?;
    let mut val_history = vec![best_loss];
    let mut best_epoch = 0;

    let mut flat = params.flat();
    let mut adam = AdamState::new(flat.len(), AdamConfig::with_learning_rate(S::lit(config.learning_rate)));
    let mut order: Vec<usize> = (0..positions).collect();
    let mut grads = vec![S::zero(); flat.len()];
    let mut x = vec![S::zero(); EXPERTS * q];
    let width = EXPERTS * q;
    let bias_at = q * width;
    let y = train.targets.values();

    for epoch in 1..=config.max_epochs {
        stream.shuffle(&mut order);
        for chunk in order.chunks(config.batch_size) {
            grads.iter_mut().for_each(|g| *g = S::zero());
            let scale = S::one() / S::from_usize_lossy(chunk.len() * q);
            for &p in chunk {
                gather_position(train.experts, p, q, &mut x);
                for k in 0..q {
                    let row = &flat[k * width..(k + 1) * width];
                    let z = dot(row, &x) + flat[bias_at + k];
                    let g = pinball_grad(y[p], z, levels[k]) * scale;
                    if g == S::zero() {
                        continue;
                    }
                    for (gw, &xc) in grads[k * width..(k + 1) * width].iter_mut().zip(&x) {
                        *gw = *gw + g * xc;
                    }
                    grads[bias_at + k] = grads[bias_at + k] + g;
                }
            }
            adam.update(&mut flat, &grads)?;
        }
        params = FusionParams::from_flat(q, &flat)?;
        let loss = fused_loss(&params, val, levels)?;
        val_history.push(loss);
        if loss < best_loss {
            best_loss = loss;
            best = params.clone();
            best_epoch = epoch;
        } else if epoch - best_epoch >= config.patience {
            break;
        }
    }
    Ok(FusionFit {
        params: best,
        val_history,
        best_epoch,
        initial_expert,
    })
}

/// Mean pinball of fused predictions, for reporting.
pub fn fusion_loss<S: Scalar>(params: &FusionParams<S>, split: FusionSplit<'_, S>, levels: &[S]) -> Result<S> {
    fused_loss(params, split, levels)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(shape: &[usize], v: Vec<f64>) -> Tensor<f64> {
        Tensor::from_vec(shape, v).unwrap()
    }

    #[test]
    fn selector_returns_first_expert() {
        let a = t(&[1, 1, 3], vec![1.0, 2.0, 3.0]);
        let b = t(&[1, 1, 3], vec![4.0, 5.0, 6.0]);
        let c = t(&[1, 1, 3], vec![7.0, 8.0, 9.0]);
        let z = fuse(&a, &b, &c, &FusionParams::selector(3, 0)).unwrap();
        assert_eq!(z, a);
        assert_eq!(fuse(&a, &b, &c, &FusionParams::selector(3, 2)).unwrap(), c);
    }

    #[test]
    fn average_weights_give_mean() {
        let a = t(&[1, 1, 3], vec![1.0, 2.0, 3.0]);
        let b = t(&[1, 1, 3], vec![4.0, 5.0, 6.0]);
        let c = t(&[1, 1, 3], vec![7.0, 8.0, 9.0]);
        let z = fuse(&a, &b, &c, &FusionParams::average(3)).unwrap();
        for (got, want) in z.values().iter().zip([4.0, 5.0, 6.0]) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let a = t(&[1, 2, 3], vec![0.0; 6]);
        let b = t(&[2, 1, 3], vec![0.0; 6]);
        assert!(fuse(&a, &b, &a, &FusionParams::selector(3, 0)).is_err());
    }

    #[test]
    fn checkpoint_round_trip() {
        let p = FusionParams::<f64>::average(3);
        assert_eq!(FusionParams::from_checkpoint(&p.to_checkpoint()).unwrap(), p);
    }
}
