//! Pinball loss, the per-instance loss tensor `l[i, j, k]` (node, window, quantile),
//! masked objectives and the point / quantile evaluation metrics.
//!
//! Layout conventions used across the crate:
//!
//! - window predictions: `[W, T_out, N, Q]`
//! - window targets: `[W, T_out, N]`
//! - loss tensor: `[N, W, Q]`

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::numerics::Tensor;
use crate::{Error, Result, Scalar};

/// Targets with `|y|` below this (original units) are left out of MAPE.
pub const MAPE_ZERO_GUARD: f64 = 1e-4;

/// Quantile (pinball) loss of prediction `y_hat` against target `y` at level `alpha`.
///
/// At the kink `y_hat == y` the `y_hat <= y` branch applies, which evaluates to zero.
#[inline]
pub fn pinball<S: Scalar>(y: S, y_hat: S, alpha: S) -> S {
    if y_hat <= y {
        alpha * (y - y_hat)
    } else {
        (S::one() - alpha) * (y_hat - y)
    }
}

/// Derivative of [`pinball`] with respect to `y_hat`, using the `y_hat <= y` branch at the kink.
#[inline]
pub fn pinball_grad<S: Scalar>(y: S, y_hat: S, alpha: S) -> S {
    if y_hat <= y {
        -alpha
    } else {
        S::one() - alpha
    }
}

/// Ordered quantile levels, strictly increasing inside `(0, 1)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<S>", into = "Vec<S>")]
#[serde(bound(serialize = "S: Scalar", deserialize = "S: Scalar"))]
pub struct QuantileSet<S> {
    levels: Vec<S>,
}

impl<S: Scalar> QuantileSet<S> {
    pub fn new(levels: Vec<S>) -> Result<Self> {
        if levels.is_empty() {
            return Err(Error::config("quantiles", "at least one level is required"));
        }
        if levels.iter().any(|&a| !(a > S::zero() && a < S::one())) {
            return Err(Error::config("quantiles", "levels must lie in (0, 1)"));
        }
        if levels.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::config("quantiles", "levels must be strictly increasing"));
        }
        Ok(Self { levels })
    }

    pub fn levels(&self) -> &[S] {
        &self.levels
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    pub fn median_index(&self) -> Option<usize> {
        self.levels.iter().position(|&a| a == S::lit(0.5))
    }

    /// Column label such as `q10` for level 0.1.
    pub fn label(level: S) -> String {
        format!("q{}", (level.as_f64() * 100.0).round() as i64)
    }
}

impl<S: Scalar> Default for QuantileSet<S> {
    fn default() -> Self {
        Self {
            levels: vec![S::lit(0.1), S::lit(0.5), S::lit(0.9)],
        }
    }
}

impl<S: Scalar> TryFrom<Vec<S>> for QuantileSet<S> {
    type Error = Error;

    fn try_from(levels: Vec<S>) -> Result<Self> {
        Self::new(levels)
    }
}

impl<S: Scalar> From<QuantileSet<S>> for Vec<S> {
    fn from(q: QuantileSet<S>) -> Self {
        q.levels
    }
}

/// Per-instance losses `l[i, j, k]` over nodes, windows and quantile heads, each
/// averaged over the output horizon.
#[derive(Clone, Debug, PartialEq)]
pub struct LossTensor<S> {
    values: Tensor<S>,
}

impl<S: Scalar> LossTensor<S> {
    pub fn from_tensor(values: Tensor<S>) -> Result<Self> {
        if values.shape().len() != 3 {
            return Err(Error::Contract(format!(
                "loss tensor must be [N, W, Q], got {:?}",
                values.shape()
            )));
        }
        if values.values().iter().any(|&v| v < S::zero()) {
            return Err(Error::Contract("loss tensor entries must be nonnegative".into()));
        }
        Ok(Self { values })
    }

    pub fn tensor(&self) -> &Tensor<S> {
        &self.values
    }

    pub fn nodes(&self) -> usize {
        self.values.shape()[0]
    }

    pub fn windows(&self) -> usize {
        self.values.shape()[1]
    }

    pub fn quantiles(&self) -> usize {
        self.values.shape()[2]
    }

    #[inline]
    pub fn get(&self, node: usize, window: usize, quantile: usize) -> S {
        let [_, w, q] = self.dims();
        self.values.values()[(node * w + window) * q + quantile]
    }

    pub fn dims(&self) -> [usize; 3] {
        let s = self.values.shape();
        [s[0], s[1], s[2]]
    }

    pub fn max(&self) -> S {
        self.values
            .values()
            .iter()
            .fold(S::zero(), |acc, &v| if v > acc { v } else { acc })
    }
}

/// Builds `l[i, j, k] = mean_t pinball(target[j, t, i], pred[j, t, i, k], alpha_k)`.
pub fn instance_loss_tensor<S: Scalar>(
    predictions: &Tensor<S>,
    targets: &Tensor<S>,
    quantile_levels: &[S],
) -> Result<LossTensor<S>> {
    let (w, t_out, n) = target_dims(targets)?;
    let q = quantile_levels.len();
    predictions.expect_shape("instance_loss_tensor predictions", &[w, t_out, n, q])?;
    let p = predictions.values();
    let y = targets.values();
    let mut out = vec![S::zero(); n * w * q];
    let horizon = S::from_usize_lossy(t_out);
    for j in 0..w {
        for i in 0..n {
            for (k, &alpha) in quantile_levels.iter().enumerate() {
                let mut acc = S::zero();
                for t in 0..t_out {
                    let yi = y[(j * t_out + t) * n + i];
                    let pi = p[((j * t_out + t) * n + i) * q + k];
                    acc = acc + pinball(yi, pi, alpha);
                }
                out[(i * w + j) * q + k] = acc / horizon;
            }
        }
    }
    LossTensor::from_tensor(Tensor::from_vec(&[n, w, q], out)?)
}

fn target_dims<S: Scalar>(targets: &Tensor<S>) -> Result<(usize, usize, usize)> {
    match *targets.shape() {
        [w, t, n] => Ok((w, t, n)),
        _ => Err(Error::Contract(format!(
            "targets must be [W, T_out, N], got {:?}",
            targets.shape()
        ))),
    }
}

/// Weighted mean of the loss tensor under an indicator / weight tensor.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MaskedObjective<S> {
    pub value: S,
    pub total_weight: S,
}

impl<S: Scalar> MaskedObjective<S> {
    /// False when every weight is zero ("no active instances").
    pub fn is_active(&self) -> bool {
        self.total_weight > S::zero()
    }
}

/// `sum(v * l) / sum(v)`, or zero with an inactive flag when all `v` vanish.
pub fn masked_objective<S: Scalar>(losses: &LossTensor<S>, v: &Tensor<S>) -> Result<MaskedObjective<S>> {
    check_weights(losses, v)?;
    let mut weighted = S::zero();
    let mut total = S::zero();
    for (&l, &w) in losses.tensor().values().iter().zip(v.values()) {
        weighted = weighted + w * l;
        total = total + w;
    }
    let value = if total > S::zero() { weighted / total } else { S::zero() };
    Ok(MaskedObjective {
        value,
        total_weight: total,
    })
}

/// Unnormalized self-paced objective `sum(v * l) - lambda * sum(v)`.
pub fn spl_objective<S: Scalar>(losses: &LossTensor<S>, v: &Tensor<S>, lambda: S) -> Result<S> {
    check_weights(losses, v)?;
    let mut weighted = S::zero();
    let mut total = S::zero();
    for (&l, &w) in losses.tensor().values().iter().zip(v.values()) {
        weighted = weighted + w * l;
        total = total + w;
    }
    Ok(weighted - lambda * total)
}

fn check_weights<S: Scalar>(losses: &LossTensor<S>, v: &Tensor<S>) -> Result<()> {
    v.expect_shape("indicator tensor", losses.tensor().shape())?;
    if v.values().iter().any(|&w| w < S::zero() || w > S::one()) {
        return Err(Error::Contract("indicator weights must lie in [0, 1]".into()));
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointMetrics<S> {
    pub rmse: S,
    pub mae: S,
    /// Percent.
    pub mape: S,
}

/// RMSE, MAE and MAPE (percent) of median predictions in original units.
pub fn point_metrics<S: Scalar>(median: &[S], targets: &[S]) -> Result<PointMetrics<S>> {
    if median.len() != targets.len() {
        return Err(Error::shape("point_metrics", &[targets.len()], &[median.len()]));
    }
    let guard = S::lit(MAPE_ZERO_GUARD);
    let mut sq = S::zero();
    let mut abs = S::zero();
    let mut pct = S::zero();
    let mut pct_count = 0usize;
    for (&p, &y) in median.iter().zip(targets) {
        let err = (y - p).abs();
        sq = sq + err * err;
        abs = abs + err;
        if y.abs() >= guard {
            pct = pct + err / y.abs();
            pct_count += 1;
        }
    }
    if pct_count == 0 {
        return Err(Error::AllTargetsGuarded);
    }
    let n = S::from_usize_lossy(targets.len());
    Ok(PointMetrics {
        rmse: (sq / n).sqrt(),
        mae: abs / n,
        mape: pct / S::from_usize_lossy(pct_count) * S::lit(100.0),
    })
}

/// Metrics at one output step (1-based horizon).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HorizonMetrics<S> {
    pub horizon: usize,
    pub rmse: S,
    pub mae: S,
    pub mape: S,
    /// `(level, mean pinball)` per quantile head.
    pub quantile_losses: Vec<(S, S)>,
}

impl<S: Scalar> HorizonMetrics<S> {
    pub fn quantile_loss(&self, level: S) -> Option<S> {
        self.quantile_losses.iter().find(|(a, _)| *a == level).map(|&(_, v)| v)
    }

    pub fn mean_quantile_loss(&self) -> S {
        let vals: Vec<S> = self.quantile_losses.iter().map(|&(_, v)| v).collect();
        crate::numerics::mean(&vals)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport<S> {
    pub horizons: Vec<HorizonMetrics<S>>,
}

impl<S: Scalar> MetricsReport<S> {
    pub fn horizon(&self, h: usize) -> Option<&HorizonMetrics<S>> {
        self.horizons.iter().find(|m| m.horizon == h)
    }

    /// `{ "3": { "rmse": .., "mae": .., "mape": .., "q10": .., ... }, ... }`
    pub fn to_json(&self) -> Value {
        let mut root = Map::new();
        for m in &self.horizons {
            let mut row = Map::new();
            row.insert("rmse".into(), json_num(m.rmse));
            row.insert("mae".into(), json_num(m.mae));
            row.insert("mape".into(), json_num(m.mape));
            for &(level, v) in &m.quantile_losses {
                row.insert(QuantileSet::label(level), json_num(v));
            }
            root.insert(m.horizon.to_string(), Value::Object(row));
        }
        Value::Object(root)
    }

    pub fn from_json(value: &Value, quantile_levels: &[S]) -> Result<Self> {
        let bad = |msg: String| Error::Parse { line: 0, message: msg };
        let root = value.as_object().ok_or_else(|| bad("metrics root must be an object".into()))?;
        let mut horizons = Vec::new();
        for (key, row) in root {
            let horizon: usize = key.parse().map_err(|_| bad(format!("bad horizon key `{key}`")))?;
            let field = |name: &str| -> Result<S> {
                row.get(name)
                    .and_then(Value::as_f64)
                    .map(S::lit)
                    .ok_or_else(|| bad(format!("horizon {horizon}: missing `{name}`")))
            };
            let mut quantile_losses = Vec::new();
            for &level in quantile_levels {
                quantile_losses.push((level, field(&QuantileSet::label(level))?));
            }
            horizons.push(HorizonMetrics {
                horizon,
                rmse: field("rmse")?,
                mae: field("mae")?,
                mape: field("mape")?,
                quantile_losses,
            });
        }
        Ok(Self { horizons })
    }

    /// One row per horizon: `horizon,rmse,mae,mape,q10,q50,q90`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("horizon,rmse,mae,mape");
        if let Some(first) = self.horizons.first() {
            for &(level, _) in &first.quantile_losses {
                out.push(',');
                out.push_str(&QuantileSet::label(level));
            }
        }
        out.push('\n');
        for m in &self.horizons {
            out.push_str(&format!("{},{},{},{}", m.horizon, m.rmse, m.mae, m.mape));
            for &(_, v) in &m.quantile_losses {
                out.push_str(&format!(",{v}"));
            }
            out.push('\n');
        }
        out
    }
}

fn json_num<S: Scalar>(v: S) -> Value {
    serde_json::Number::from_f64(v.as_f64())
        .map(Value::Number)
        .unwrap_or(Value::Null)
}

/// Per-horizon point metrics (median head) and quantile losses (every head).
///
/// `horizons` are 1-based output steps.
pub fn quantile_report<S: Scalar>(
    predictions: &Tensor<S>,
    targets: &Tensor<S>,
    quantiles: &QuantileSet<S>,
    horizons: &[usize],
) -> Result<MetricsReport<S>> {
    let (w, t_out, n) = target_dims(targets)?;
    let q = quantiles.len();
    predictions.expect_shape("quantile_report predictions", &[w, t_out, n, q])?;
    let median = quantiles
        .median_index()
        .ok_or_else(|| Error::Contract("quantile set has no 0.5 level for point metrics".into()))?;
    let p = predictions.values();
    let y = targets.values();
    let mut rows = Vec::with_capacity(horizons.len());
    for &h in horizons {
        if h == 0 || h > t_out {
            return Err(Error::Horizon { horizon: h, t_out });
        }
        let t = h - 1;
        let mut ys = Vec::with_capacity(w * n);
        let mut heads: Vec<Vec<S>> = vec![Vec::with_capacity(w * n); q];
        for j in 0..w {
            for i in 0..n {
                ys.push(y[(j * t_out + t) * n + i]);
                for (k, head) in heads.iter_mut().enumerate() {
                    head.push(p[((j * t_out + t) * n + i) * q + k]);
                }
            }
        }
        let point = point_metrics(&heads[median], &ys)?;
        let count = S::from_usize_lossy(ys.len());
        let quantile_losses = quantiles
            .levels()
            .iter()
            .zip(&heads)
            .map(|(&alpha, head)| {
                let mut acc = S::zero();
                for (&yi, &pi) in ys.iter().zip(head) {
                    acc = acc + pinball(yi, pi, alpha);
                }
                (alpha, acc / count)
            })
            .collect();
        rows.push(HorizonMetrics {
            horizon: h,
            rmse: point.rmse,
            mae: point.mae,
            mape: point.mape,
            quantile_losses,
        });
    }
    Ok(MetricsReport { horizons: rows })
}

/// Mean pinball over every window, step, node and head.
pub fn mean_quantile_loss<S: Scalar>(predictions: &Tensor<S>, targets: &Tensor<S>, quantile_levels: &[S]) -> Result<S> {
    let (w, t_out, n) = target_dims(targets)?;
    let q = quantile_levels.len();
    predictions.expect_shape("mean_quantile_loss predictions", &[w, t_out, n, q])?;
    let p = predictions.values();
    let mut acc = S::zero();
    for (pos, &yi) in targets.values().iter().enumerate() {
        for (k, &alpha) in quantile_levels.iter().enumerate() {
            acc = acc + pinball(yi, p[pos * q + k], alpha);
        }
    }
    Ok(acc / S::from_usize_lossy(w * t_out * n * q))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pinball_branches() {
        assert_eq!(pinball(100.0, 110.0, 0.1), 0.9 * 10.0);
        assert!((pinball(100.0f64, 110.0, 0.1) - 9.0).abs() < 1e-12);
        assert_eq!(pinball(5.0, 5.0, 0.3), 0.0);
        assert_eq!(pinball(1.0, 3.0, 0.5), 1.0);
        assert_eq!(pinball(3.0, 1.0, 0.5), 1.0);
        assert_eq!(pinball(2.0f32, 1.0, 0.9), 0.9);
    }

    #[test]
    fn quantile_set_validation() {
        assert!(QuantileSet::new(vec![0.5, 0.1]).is_err());
        assert!(QuantileSet::new(vec![0.0, 0.5]).is_err());
        assert!(QuantileSet::<f64>::new(vec![]).is_err());
        let q = QuantileSet::<f64>::default();
        assert_eq!(q.median_index(), Some(1));
        assert_eq!(QuantileSet::label(0.1f64), "q10");
        assert_eq!(QuantileSet::label(0.9f32), "q90");
        let json = serde_json::to_string(&q).unwrap();
        assert_eq!(json, "[0.1,0.5,0.9]");
        assert!(serde_json::from_str::<QuantileSet<f64>>("[0.9,0.1]").is_err());
    }

    fn fixture() -> (Tensor<f64>, Tensor<f64>) {
        // W=1, T_out=2, N=2, Q=3
        let targets = Tensor::from_vec(&[1, 2, 2], vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let preds = Tensor::from_vec(
            &[1, 2, 2, 3],
            vec![0.5, 1.0, 1.5, 1.0, 2.5, 3.0, 2.0, 3.0, 4.0, 4.0, 4.0, 5.0],
        )
        .unwrap();
        (preds, targets)
    }

    #[test]
    fn loss_tensor_matches_triple_loop() {
        let (preds, targets) = fixture();
        let levels = [0.1, 0.5, 0.9];
        let l = instance_loss_tensor(&preds, &targets, &levels).unwrap();
        assert_eq!(l.dims(), [2, 1, 3]);
        for i in 0..2 {
            for (k, &a) in levels.iter().enumerate() {
                let mut acc = 0.0;
                for t in 0..2 {
                    acc += pinball(targets.at(&[0, t, i]), preds.at(&[0, t, i, k]), a);
                }
                assert_eq!(l.get(i, 0, k), acc / 2.0);
            }
        }
    }

    #[test]
    fn loss_tensor_zero_when_perfect() {
        let targets = Tensor::from_vec(&[2, 1, 1], vec![1.0, -1.0]).unwrap();
        let preds = Tensor::from_vec(&[2, 1, 1, 3], vec![1.0, 1.0, 1.0, -1.0, -1.0, -1.0]).unwrap();
        let l = instance_loss_tensor(&preds, &targets, &[0.1, 0.5, 0.9]).unwrap();
        assert!(l.tensor().values().iter().all(|&v| v == 0.0));
        assert!(instance_loss_tensor(&preds, &targets, &[0.5]).is_err());
    }

    #[test]
    fn masked_objective_cases() {
        let l = LossTensor::from_tensor(
            Tensor::from_vec(&[2, 2, 2], vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0]).unwrap(),
        )
        .unwrap();
        let ones = Tensor::filled(&[2, 2, 2], 1.0);
        assert_eq!(masked_objective(&l, &ones).unwrap().value, 4.5);
        let zeros = Tensor::zeros(&[2, 2, 2]);
        let m = masked_objective(&l, &zeros).unwrap();
        assert_eq!(m.value, 0.0);
        assert!(!m.is_active());
        let v = Tensor::from_vec(&[2, 2, 2], vec![1.0, 0.0, 0.5, 0.0, 0.0, 1.0, 0.0, 0.5]).unwrap();
        // (1 + 1.5 + 6 + 4) / 3
        let m = masked_objective(&l, &v).unwrap();
        assert!((m.value - 12.5f64 / 3.0).abs() < 1e-15);
        assert!(masked_objective(&l, &Tensor::filled(&[2, 2, 2], 2.0)).is_err());
    }

    #[test]
    fn spl_objective_cases() {
        let l = LossTensor::from_tensor(Tensor::from_vec(&[1, 1, 3], vec![0.5, 1.2, 0.9]).unwrap()).unwrap();
        let ones = Tensor::filled(&[1, 1, 3], 1.0);
        let v = spl_objective(&l, &ones, 2.0).unwrap();
        assert!(v < 0.0);
        assert!((v - (2.6f64 - 6.0)).abs() < 1e-12);
        assert_eq!(spl_objective(&l, &Tensor::zeros(&[1, 1, 3]), 2.0).unwrap(), 0.0);
    }

    #[test]
    fn point_metrics_hand_values() {
        let m = point_metrics(&[0.0, 0.0], &[3.0, 4.0]).unwrap();
        assert!((m.rmse - (12.5f64).sqrt()).abs() < 1e-12);
        assert!((m.rmse - 3.5355).abs() < 1e-4);
        assert_eq!(m.mae, 3.5);
        assert_eq!(m.mape, 100.0);
        let perfect = point_metrics(&[1.0, 2.0], &[1.0, 2.0]).unwrap();
        assert_eq!((perfect.rmse, perfect.mae, perfect.mape), (0.0, 0.0, 0.0));
    }

    #[test]
    fn mape_guard_only_affects_mape() {
        let m = point_metrics(&[1.0, 2.0], &[0.0, 4.0]).unwrap();
        assert_eq!(m.mae, 1.5);
        assert!((m.rmse - (2.5f64).sqrt()).abs() < 1e-12);
        assert_eq!(m.mape, 50.0);
        assert!(matches!(point_metrics(&[1.0], &[0.0]), Err(Error::AllTargetsGuarded)));
    }

    #[test]
    fn report_q50_is_half_mae() {
        let (preds, targets) = fixture();
        let q = QuantileSet::default();
        let r = quantile_report(&preds, &targets, &q, &[1, 2]).unwrap();
        for m in &r.horizons {
            assert_eq!(m.quantile_loss(0.5).unwrap(), m.mae / 2.0);
        }
        assert!(matches!(
            quantile_report(&preds, &targets, &q, &[3]),
            Err(Error::Horizon { horizon: 3, t_out: 2 })
        ));
    }

    #[test]
    fn report_json_round_trip() {
        let (preds, targets) = fixture();
        let q = QuantileSet::default();
        let r = quantile_report(&preds, &targets, &q, &[1, 2]).unwrap();
        let json = r.to_json();
        assert!(json["2"]["q90"].is_number());
        let back = MetricsReport::from_json(&json, q.levels()).unwrap();
        assert_eq!(back, r);
        let csv = r.to_csv();
        assert!(csv.starts_with("horizon,rmse,mae,mape,q10,q50,q90\n1,"));
    }
}
