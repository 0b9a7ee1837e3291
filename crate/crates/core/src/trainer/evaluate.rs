use crate::data::zscore_invert;
use crate::forecaster::{predict_batch, sort_quantiles, ModelParams};
use crate::fusion::{fuse, FusionParams};
use crate::loss_metrics::{mean_quantile_loss, quantile_report, MetricsReport, QuantileSet};
use crate::numerics::Tensor;
use crate::{Result, Scalar};

use super::{Prepared, SplitName};

/// A single model or the fused three-expert ensemble.
#[derive(Clone, Copy, Debug)]
pub enum Predictor<'a, S> {
    Single(&'a ModelParams<S>),
    Ensemble {
        experts: [&'a ModelParams<S>; 3],
        fusion: &'a FusionParams<S>,
    },
}

/// Raw (normalized, unsorted) head outputs `[W, T_out, N, Q]` of one model.
pub fn predict_normalized<S: Scalar>(params: &ModelParams<S>, prep: &Prepared<S>, which: SplitName) -> Result<Tensor<S>> {
    let nodes: Vec<usize> = (0..prep.num_nodes()).collect();
    predict_batch(params, prep.inputs(which), &nodes)
}

/// Predictions in original units with heads sorted ascending.
pub fn predict<S: Scalar>(predictor: Predictor<'_, S>, prep: &Prepared<S>, which: SplitName) -> Result<Tensor<S>> {
    let normalized = match predictor {
        Predictor::Single(p) => predict_normalized(p, prep, which)?,
        Predictor::Ensemble { experts, fusion } => {
            let [a, b, c] = experts;
            fuse(
                &predict_normalized(a, prep, which)?,
                &predict_normalized(b, prep, which)?,
                &predict_normalized(c, prep, which)?,
                fusion,
            )?
        }
    };
    let mut out = zscore_invert(&normalized, prep.stats(), 2)?;
    sort_quantiles(&mut out);
    Ok(out)
}

/// Sorts heads and builds the per-horizon report for predictions already in
/// original units.
pub fn report_predictions<S: Scalar>(
    predictions: &Tensor<S>,
    targets: &Tensor<S>,
    quantiles: &QuantileSet<S>,
    horizons: &[usize],
) -> Result<MetricsReport<S>> {
    let mut sorted = predictions.clone();
    sort_quantiles(&mut sorted);
    quantile_report(&sorted, targets, quantiles, horizons)
}

/// Per-horizon metrics in original units.
pub fn evaluate<S: Scalar>(
    predictor: Predictor<'_, S>,
    prep: &Prepared<S>,
    which: SplitName,
    quantiles: &QuantileSet<S>,
    horizons: &[usize],
) -> Result<MetricsReport<S>> {
    let preds = predict(predictor, prep, which)?;
    quantile_report(&preds, prep.raw_targets(which)?, quantiles, horizons)
}

/// Mean pinball over every head and output step, in original units.
pub fn split_qloss<S: Scalar>(predictor: Predictor<'_, S>, prep: &Prepared<S>, which: SplitName, levels: &[S]) -> Result<S> {
    let preds = predict(predictor, prep, which)?;
    mean_quantile_loss(&preds, prep.raw_targets(which)?, levels)
}
