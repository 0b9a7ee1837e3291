//! Multi-quantile base forecasters with exact manual backpropagation.
//!
//! Each node's `T_in` history is mapped to `T_out × Q` outputs (output index
//! `t * Q + k`). Two architectures are provided: a linear autoregressor and a
//! one-hidden-layer tanh MLP. Parameters are shared across nodes or kept per node.

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::loss_metrics::{pinball, pinball_grad};
use crate::numerics::{RandomStream, Tensor};
use crate::{Error, Result, Scalar};

pub const CHECKPOINT_VERSION: u64 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Architecture {
    Linear,
    Mlp { hidden: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum Sharing {
    Shared,
    PerNode { nodes: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub architecture: Architecture,
    pub t_in: usize,
    pub t_out: usize,
    pub quantiles: usize,
    pub sharing: Sharing,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct LayerShape {
    fan_in: usize,
    fan_out: usize,
    weight_offset: usize,
    bias_offset: usize,
}

impl ModelSpec {
    pub fn validate(&self) -> Result<()> {
        if self.t_in == 0 || self.t_out == 0 || self.quantiles == 0 {
            return Err(Error::config("model", "T_in, T_out and Q must be positive"));
        }
        if let Architecture::Mlp { hidden: 0 } = self.architecture {
            return Err(Error::config("model.hidden", "MLP hidden width must be at least 1"));
        }
        if let Sharing::PerNode { nodes: 0 } = self.sharing {
            return Err(Error::config("model.sharing", "per-node mode needs at least one node"));
        }
        Ok(())
    }

    pub fn outputs(&self) -> usize {
        self.t_out * self.quantiles
    }

    pub fn groups(&self) -> usize {
        match self.sharing {
            Sharing::Shared => 1,
            Sharing::PerNode { nodes } => nodes,
        }
    }

    fn group_of(&self, node: usize) -> usize {
        match self.sharing {
            Sharing::Shared => 0,
            Sharing::PerNode { .. } => node,
        }
    }

    fn dims(&self) -> Vec<(usize, usize)> {
        match self.architecture {
            Architecture::Linear => vec![(self.t_in, self.outputs())],
            Architecture::Mlp { hidden } => vec![(self.t_in, hidden), (hidden, self.outputs())],
        }
    }

    fn layers(&self) -> Vec<LayerShape> {
        let g = self.groups();
        let mut offset = 0;
        self.dims()
            .into_iter()
            .map(|(fan_in, fan_out)| {
                let weight_offset = offset;
                offset += g * fan_in * fan_out;
                let bias_offset = offset;
                offset += g * fan_out;
                LayerShape {
                    fan_in,
                    fan_out,
                    weight_offset,
                    bias_offset,
                }
            })
            .collect()
    }

    pub fn num_params(&self) -> usize {
        let g = self.groups();
        self.dims().iter().map(|&(i, o)| g * (i * o + o)).sum()
    }

    fn hidden(&self) -> usize {
        match self.architecture {
            Architecture::Linear => 0,
            Architecture::Mlp { hidden } => hidden,
        }
    }
}

/// Flat parameter vector laid out layer by layer (weights `[G, fan_in, fan_out]`,
/// then biases `[G, fan_out]`).
#[derive(Clone, Debug, PartialEq)]
pub struct ModelParams<S> {
    spec: ModelSpec,
    values: Tensor<S>,
}

/// Weights uniform in `±1/sqrt(fan_in)`, biases zero.
pub fn init_params<S: Scalar>(spec: &ModelSpec, stream: &mut RandomStream) -> Result<ModelParams<S>> {
    spec.validate()?;
    let mut values = vec![S::zero(); spec.num_params()];
    let g = spec.groups();
    for layer in spec.layers() {
        let bound = 1.0 / (layer.fan_in as f64).sqrt();
        let count = g * layer.fan_in * layer.fan_out;
        for v in &mut values[layer.weight_offset..layer.weight_offset + count] {
            *v = S::lit(stream.uniform_range(-bound, bound));
        }
    }
    Ok(ModelParams {
        spec: *spec,
        values: Tensor::from_vec(&[spec.num_params()], values)?,
    })
}

impl<S: Scalar> ModelParams<S> {
    pub fn from_flat(spec: &ModelSpec, values: Vec<S>) -> Result<Self> {
        spec.validate()?;
        if values.len() != spec.num_params() {
            return Err(Error::shape("model parameters", &[spec.num_params()], &[values.len()]));
        }
        Ok(Self {
            spec: *spec,
            values: Tensor::from_vec(&[values.len()], values)?,
        })
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn flat(&self) -> &[S] {
        self.values.values()
    }

    pub fn flat_mut(&mut self) -> &mut [S] {
        self.values.values_mut()
    }

    pub fn as_tensor(&self) -> &Tensor<S> {
        &self.values
    }

    /// Per-layer `(weight, bias)` tensors; weights are `[fan_in, fan_out]` when
    /// shared and `[N, fan_in, fan_out]` per node.
    pub fn layer_tensors(&self) -> Vec<(Tensor<S>, Tensor<S>)> {
        let g = self.spec.groups();
        let v = self.values.values();
        self.spec
            .layers()
            .iter()
            .map(|l| {
                let wn = g * l.fan_in * l.fan_out;
                let bn = g * l.fan_out;
                let (ws, bs) = if g == 1 {
                    (vec![l.fan_in, l.fan_out], vec![l.fan_out])
                } else {
                    (vec![g, l.fan_in, l.fan_out], vec![g, l.fan_out])
                };
                (
                    Tensor::from_vec(&ws, v[l.weight_offset..l.weight_offset + wn].to_vec()).expect("finite params"),
                    Tensor::from_vec(&bs, v[l.bias_offset..l.bias_offset + bn].to_vec()).expect("finite params"),
                )
            })
            .collect()
    }

    fn weight(&self, layer: &LayerShape, group: usize) -> &[S] {
        let n = layer.fan_in * layer.fan_out;
        let start = layer.weight_offset + group * n;
        &self.values.values()[start..start + n]
    }

    fn bias(&self, layer: &LayerShape, group: usize) -> &[S] {
        let start = layer.bias_offset + group * layer.fan_out;
        &self.values.values()[start..start + layer.fan_out]
    }

    /// JSON checkpoint: `{ version, spec, layers: [{ name, shape, values }] }`.
    pub fn to_checkpoint(&self) -> Value {
        let layers: Vec<Value> = self
            .layer_tensors()
            .into_iter()
            .enumerate()
            .flat_map(|(i, (w, b))| {
                [
                    json!({ "name": format!("dense{i}.weight"), "shape": w.shape(), "values": to_f64s(w.values()) }),
                    json!({ "name": format!("dense{i}.bias"), "shape": b.shape(), "values": to_f64s(b.values()) }),
                ]
            })
            .collect();
        json!({ "version": CHECKPOINT_VERSION, "spec": self.spec, "layers": layers })
    }

    pub fn from_checkpoint(value: &Value) -> Result<Self> {
        let bad = |m: &str| Error::Parse {
            line: 0,
            message: format!("checkpoint: {m}"),
        };
        if value.get("version").and_then(Value::as_u64) != Some(CHECKPOINT_VERSION) {
            return Err(bad("unsupported version"));
        }
        let spec: ModelSpec =
            serde_json::from_value(value.get("spec").cloned().ok_or_else(|| bad("missing spec"))?)
                .map_err(|e| bad(&e.to_string()))?;
        let mut flat = Vec::with_capacity(spec.num_params());
        for layer in value.get("layers").and_then(Value::as_array).ok_or_else(|| bad("missing layers"))? {
            let vals = layer.get("values").and_then(Value::as_array).ok_or_else(|| bad("layer without values"))?;
            for v in vals {
                flat.push(S::lit(v.as_f64().ok_or_else(|| bad("non-numeric value"))?));
            }
        }
        Self::from_flat(&spec, flat)
    }
}

fn to_f64s<S: Scalar>(xs: &[S]) -> Vec<f64> {
    xs.iter().map(|x| x.as_f64()).collect()
}

/// Scratch buffers for one series pass.
struct Workspace<S> {
    hidden: Vec<S>,
    out: Vec<S>,
    d_out: Vec<S>,
    d_hidden: Vec<S>,
}

impl<S: Scalar> Workspace<S> {
    fn new(spec: &ModelSpec) -> Self {
        Self {
            hidden: vec![S::zero(); spec.hidden()],
            out: vec![S::zero(); spec.outputs()],
            d_out: vec![S::zero(); spec.outputs()],
            d_hidden: vec![S::zero(); spec.hidden()],
        }
    }
}

fn dense_forward<S: Scalar>(x: &[S], w: &[S], b: &[S], out: &mut [S]) {
    let fan_out = out.len();
    out.copy_from_slice(b);
    for (i, &xi) in x.iter().enumerate() {
        let row = &w[i * fan_out..(i + 1) * fan_out];
        for (o, &wio) in out.iter_mut().zip(row) {
            *o = *o + xi * wio;
        }
    }
}

impl<S: Scalar> ModelParams<S> {
    fn series_forward(&self, group: usize, x: &[S], ws: &mut Workspace<S>) {
        let layers = self.spec.layers();
        match self.spec.architecture {
            Architecture::Linear => {
                let l = &layers[0];
                dense_forward(x, self.weight(l, group), self.bias(l, group), &mut ws.out);
            }
            Architecture::Mlp { .. } => {
                let (l0, l1) = (&layers[0], &layers[1]);
                dense_forward(x, self.weight(l0, group), self.bias(l0, group), &mut ws.hidden);
                ws.hidden.iter_mut().for_each(|h| *h = h.tanh());
                dense_forward(&ws.hidden, self.weight(l1, group), self.bias(l1, group), &mut ws.out);
            }
        }
    }

    /// Accumulates parameter gradients for one series given `d_out`.
    fn series_backward(&self, group: usize, x: &[S], ws: &mut Workspace<S>, grads: &mut [S]) {
        let layers = self.spec.layers();
        let accumulate = |layer: &LayerShape, input: &[S], delta: &[S], grads: &mut [S]| {
            let fan_out = layer.fan_out;
            let w0 = layer.weight_offset + group * layer.fan_in * fan_out;
            for (i, &xi) in input.iter().enumerate() {
                let row = &mut grads[w0 + i * fan_out..w0 + (i + 1) * fan_out];
                for (g, &d) in row.iter_mut().zip(delta) {
                    *g = *g + xi * d;
                }
            }
            let b0 = layer.bias_offset + group * fan_out;
            for (g, &d) in grads[b0..b0 + fan_out].iter_mut().zip(delta) {
                *g = *g + d;
            }
        };
        match self.spec.architecture {
            Architecture::Linear => accumulate(&layers[0], x, &ws.d_out, grads),
            Architecture::Mlp { .. } => {
                let (l0, l1) = (&layers[0], &layers[1]);
                accumulate(l1, &ws.hidden, &ws.d_out, grads);
                let w1 = self.weight(l1, group);
                for (h, dh) in ws.d_hidden.iter_mut().enumerate() {
                    let row = &w1[h * l1.fan_out..(h + 1) * l1.fan_out];
                    let mut acc = S::zero();
                    for (&w, &d) in row.iter().zip(&ws.d_out) {
                        acc = acc + w * d;
                    }
                    let a = ws.hidden[h];
                    *dh = acc * (S::one() - a * a);
                }
                accumulate(l0, x, &ws.d_hidden, grads);
            }
        }
    }
}

fn check_nodes(spec: &ModelSpec, nodes: &[usize], columns: usize) -> Result<()> {
    if nodes.len() != columns {
        return Err(Error::shape("forecaster node ids", &[columns], &[nodes.len()]));
    }
    if let Sharing::PerNode { nodes: total } = spec.sharing {
        if let Some(&bad) = nodes.iter().find(|&&n| n >= total) {
            return Err(Error::Contract(format!("node {bad} has no per-node parameters ({total} nodes)")));
        }
    }
    Ok(())
}

fn batch_dims<S: Scalar>(inputs: &Tensor<S>, spec: &ModelSpec) -> Result<(usize, usize)> {
    match *inputs.shape() {
        [b, t, n] if t == spec.t_in => Ok((b, n)),
        _ => Err(Error::Contract(format!(
            "inputs must be [B, {}, N], got {:?}",
            spec.t_in,
            inputs.shape()
        ))),
    }
}

/// Forward pass for one window `[T_in, N]` over nodes `0..N` → `[T_out, N, Q]`.
pub fn forward<S: Scalar>(params: &ModelParams<S>, input: &Tensor<S>) -> Result<Tensor<S>> {
    let &[t_in, n] = input.shape() else {
        return Err(Error::Contract(format!("input must be [T_in, N], got {:?}", input.shape())));
    };
    let nodes: Vec<usize> = (0..n).collect();
    let batched = input.clone().reshape(&[1, t_in, n])?;
    let out = predict_batch(params, &batched, &nodes)?;
    out.reshape(&[params.spec.t_out, n, params.spec.quantiles])
}

/// Batched forward: `[B, T_in, n]` over the given global node ids → `[B, T_out, n, Q]`.
pub fn predict_batch<S: Scalar>(params: &ModelParams<S>, inputs: &Tensor<S>, nodes: &[usize]) -> Result<Tensor<S>> {
    let spec = params.spec;
    let (b, n) = batch_dims(inputs, &spec)?;
    check_nodes(&spec, nodes, n)?;
    let (t_in, t_out, q) = (spec.t_in, spec.t_out, spec.quantiles);
    let x_all = inputs.values();
    let mut out = vec![S::zero(); b * t_out * n * q];
    let mut ws = Workspace::new(&spec);
    let mut x = vec![S::zero(); t_in];
    for bi in 0..b {
        for (col, &node) in nodes.iter().enumerate() {
            for (t, xt) in x.iter_mut().enumerate() {
                *xt = x_all[(bi * t_in + t) * n + col];
            }
            params.series_forward(spec.group_of(node), &x, &mut ws);
            for t in 0..t_out {
                for k in 0..q {
                    out[((bi * t_out + t) * n + col) * q + k] = ws.out[t * q + k];
                }
            }
        }
    }
    Tensor::from_vec(&[b, t_out, n, q], out)
}

/// Sorts the quantile axis (last) ascending at every position.
pub fn sort_quantiles<S: Scalar>(predictions: &mut Tensor<S>) {
    let q = *predictions.shape().last().expect("non-scalar predictions");
    for chunk in predictions.values_mut().chunks_mut(q) {
        chunk.sort_by(|a, b| a.partial_cmp(b).expect("finite predictions"));
    }
}

/// Instance weights `v` for a batch, indexed `[b, node column, head]`.
#[derive(Clone, Copy, Debug)]
pub enum MaskWeights<'a, S> {
    /// The same weight per head at every `(window, node)`.
    PerQuantile(&'a [S]),
    /// Dense `[B, n, Q]` weights.
    Dense(&'a Tensor<S>),
}

impl<S: Scalar> MaskWeights<'_, S> {
    #[inline]
    fn get(&self, b: usize, col: usize, k: usize, n: usize, q: usize) -> S {
        match self {
            MaskWeights::PerQuantile(w) => w[k],
            MaskWeights::Dense(t) => t.values()[(b * n + col) * q + k],
        }
    }
}

/// Gradient and value of the masked objective on one batch.
#[derive(Clone, Debug, PartialEq)]
pub struct BatchGradient<S> {
    pub grads: Tensor<S>,
    pub loss: S,
    /// Sum of mask weights over the batch.
    pub total_weight: S,
}

/// Exact gradient of
/// `sum_{b,n,k} v[b,n,k] * mean_t pinball(y, f(x)_{t,k}, level_k) / sum v`
/// (or the unnormalized sum when `normalize` is false).
#[allow(clippy::too_many_arguments)]
pub fn backward<S: Scalar>(
    params: &ModelParams<S>,
    inputs: &Tensor<S>,
    targets: &Tensor<S>,
    nodes: &[usize],
    weights: MaskWeights<'_, S>,
    levels: &[S],
    normalize: bool,
) -> Result<BatchGradient<S>> {
    let spec = params.spec;
    let (b, n) = batch_dims(inputs, &spec)?;
    check_nodes(&spec, nodes, n)?;
    let (t_in, t_out, q) = (spec.t_in, spec.t_out, spec.quantiles);
    targets.expect_shape("backward targets", &[b, t_out, n])?;
    if levels.len() != q {
        return Err(Error::shape("quantile levels", &[q], &[levels.len()]));
    }
    if let MaskWeights::PerQuantile(w) = weights {
        if w.len() != q {
            return Err(Error::shape("per-quantile weights", &[q], &[w.len()]));
        }
    }
    if let MaskWeights::Dense(t) = weights {
        t.expect_shape("mask weights", &[b, n, q])?;
    }

    let mut total = S::zero();
    for bi in 0..b {
        for col in 0..n {
            for k in 0..q {
                total = total + weights.get(bi, col, k, n, q);
            }
        }
    }
    let mut grads = vec![S::zero(); spec.num_params()];
    if total == S::zero() {
        return Ok(BatchGradient {
            grads: Tensor::from_vec(&[spec.num_params()], grads)?,
            loss: S::zero(),
            total_weight: total,
        });
    }
    let norm = if normalize { total } else { S::one() };
    let horizon = S::from_usize_lossy(t_out);

    let x_all = inputs.values();
    let y_all = targets.values();
    let mut ws = Workspace::new(&spec);
    let mut x = vec![S::zero(); t_in];
    let mut loss = S::zero();
    for bi in 0..b {
        for (col, &node) in nodes.iter().enumerate() {
            for (t, xt) in x.iter_mut().enumerate() {
                *xt = x_all[(bi * t_in + t) * n + col];
            }
            let group = spec.group_of(node);
            params.series_forward(group, &x, &mut ws);
            let mut any = false;
            for k in 0..q {
                let v = weights.get(bi, col, k, n, q);
                let scale = v / (norm * horizon);
                let mut head = S::zero();
                for t in 0..t_out {
                    let y = y_all[(bi * t_out + t) * n + col];
                    let yhat = ws.out[t * q + k];
                    head = head + pinball(y, yhat, levels[k]);
                    ws.d_out[t * q + k] = if v == S::zero() {
                        S::zero()
                    } else {
                        scale * pinball_grad(y, yhat, levels[k])
                    };
                }
                if v != S::zero() {
                    any = true;
                    loss = loss + v * head / horizon;
                }
            }
            if any {
                params.series_backward(group, &x, &mut ws, &mut grads);
            }
        }
    }
    Ok(BatchGradient {
        grads: Tensor::from_vec(&[spec.num_params()], grads)?,
        loss: loss / norm,
        total_weight: total,
    })
}

/// Value of the objective [`backward`] differentiates, computed by a plain forward pass.
#[allow(clippy::too_many_arguments)]
pub fn batch_objective<S: Scalar>(
    params: &ModelParams<S>,
    inputs: &Tensor<S>,
    targets: &Tensor<S>,
    nodes: &[usize],
    weights: MaskWeights<'_, S>,
    levels: &[S],
    normalize: bool,
) -> Result<S> {
    let preds = predict_batch(params, inputs, nodes)?;
    let &[b, t_out, n, q] = preds.shape() else { unreachable!() };
    let horizon = S::from_usize_lossy(t_out);
    let mut total = S::zero();
    let mut acc = S::zero();
    for bi in 0..b {
        for col in 0..n {
            for k in 0..q {
                let v = weights.get(bi, col, k, n, q);
                total = total + v;
                let mut head = S::zero();
                for t in 0..t_out {
                    head = head + pinball(targets.at(&[bi, t, col]), preds.at(&[bi, t, col, k]), levels[k]);
                }
                acc = acc + v * head / horizon;
            }
        }
    }
    if total == S::zero() {
        return Ok(S::zero());
    }
    Ok(if normalize { acc / total } else { acc })
}

/// Which architectures [`random_gradient_cases`] draws from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GradcheckFamily {
    Linear,
    Mlp,
    Both,
}

/// One randomized analytic-vs-finite-difference comparison.
#[derive(Clone, Debug, PartialEq)]
pub struct GradientCase {
    pub spec: ModelSpec,
    pub batch: usize,
    pub nodes: usize,
    pub max_relative_error: f64,
    pub worst_index: usize,
}

/// Central-difference step and absolute floor used by the gradient checks.
pub const GRADCHECK_STEP: f64 = 1e-6;
pub const GRADCHECK_FLOOR: f64 = 1e-7;

/// Draws `count` random model / batch / mask / level configurations and compares
/// the analytic gradient of the masked objective with central differences.
///
/// Targets are moved away from every prediction so no finite-difference probe
/// straddles a pinball kink.
pub fn random_gradient_cases(count: usize, seed: u64, family: GradcheckFamily) -> Result<Vec<GradientCase>> {
    let root = RandomStream::new(seed);
    let mut cases = Vec::with_capacity(count);
    for c in 0..count {
        let mut st = root.derive(&format!("gradcheck/{c}"));
        let mlp = match family {
            GradcheckFamily::Linear => false,
            GradcheckFamily::Mlp => true,
            GradcheckFamily::Both => c % 2 == 1,
        };
        let nodes = 1 + st.index(4);
        let quantiles = 1 + st.index(3);
        let spec = ModelSpec {
            architecture: if mlp {
                Architecture::Mlp { hidden: 1 + st.index(6) }
            } else {
                Architecture::Linear
            },
            t_in: 1 + st.index(5),
            t_out: 1 + st.index(3),
            quantiles,
            sharing: if st.bernoulli(0.3) {
                Sharing::PerNode { nodes }
            } else {
                Sharing::Shared
            },
        };
        let batch = 1 + st.index(3);
        let params: ModelParams<f64> = init_params(&spec, &mut st)?;
        // Non-zero biases so the check also covers the bias gradients' coupling.
        let params = ModelParams::from_flat(&spec, params.flat().iter().map(|&v| v + 0.1 * st.normal()).collect())?;
        let normal = |st: &mut RandomStream, n: usize| -> Vec<f64> { (0..n).map(|_| st.normal()).collect() };
        let x = Tensor::from_vec(&[batch, spec.t_in, nodes], normal(&mut st, batch * spec.t_in * nodes))?;
        let node_ids: Vec<usize> = (0..nodes).collect();
        let preds = predict_batch(&params, &x, &node_ids)?;
        let mut y = normal(&mut st, batch * spec.t_out * nodes);
        for (pos, yv) in y.iter_mut().enumerate() {
            let (b, rest) = (pos / (spec.t_out * nodes), pos % (spec.t_out * nodes));
            let (t, n) = (rest / nodes, rest % nodes);
            for k in 0..quantiles {
                let gap = *yv - preds.at(&[b, t, n, k]);
                if gap.abs() < 1e-3 {
                    *yv += if gap >= 0.0 { 2e-3 } else { -2e-3 };
                }
            }
        }
        let y = Tensor::from_vec(&[batch, spec.t_out, nodes], y)?;
        let mut levels: Vec<f64> = (0..quantiles).map(|_| st.uniform_range(0.02, 0.98)).collect();
        levels.sort_by(|a, b| a.partial_cmp(b).expect("finite levels"));
        let weights: Vec<f64> = (0..batch * nodes * quantiles)
            .map(|_| if st.bernoulli(0.2) { 0.0 } else { st.uniform() })
            .collect();
        let v = Tensor::from_vec(&[batch, nodes, quantiles], weights)?;
        let normalize = st.bernoulli(0.5);
        let mask = MaskWeights::Dense(&v);
        let analytic = backward(&params, &x, &y, &node_ids, mask, &levels, normalize)?;
        let objective = |flat: &Tensor<f64>| {
            let p = ModelParams::from_flat(&spec, flat.values().to_vec()).expect("same spec");
            batch_objective(&p, &x, &y, &node_ids, mask, &levels, normalize).expect("valid batch")
        };
        let numeric = crate::numerics::finite_diff_grad(objective, params.as_tensor(), GRADCHECK_STEP)?;
        let check = crate::numerics::GradCheck::compare(&analytic.grads, &numeric, GRADCHECK_FLOOR)?;
        cases.push(GradientCase {
            spec,
            batch,
            nodes,
            max_relative_error: check.max_relative_error,
            worst_index: check.worst_index,
        });
    }
    Ok(cases)
}
