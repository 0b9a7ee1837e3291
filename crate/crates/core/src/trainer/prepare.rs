use crate::data::{make_windows, split, zscore_apply, zscore_fit, NormStats, STDataset, Splits};
use crate::numerics::Tensor;
use crate::{Error, Result, Scalar};

use super::TrainConfig;

/// Windowed, split and normalized data with the tensors the loops reuse.
#[derive(Clone, Debug)]
pub struct Prepared<S> {
    raw: STDataset<S>,
    normalized: STDataset<S>,
    stats: NormStats<S>,
    splits: Splits,
    t_in: usize,
    t_out: usize,
    /// Normalized `[W, T_in, N]` inputs and `[W, T_out, N]` targets per split.
    train: (Tensor<S>, Tensor<S>),
    val: (Tensor<S>, Tensor<S>),
    test: (Tensor<S>, Tensor<S>),
    /// Targets in original units.
    val_raw: Tensor<S>,
    test_raw: Tensor<S>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SplitName {
    Train,
    Val,
    Test,
}

/// Windows the series, splits chronologically and z-scores every node with
/// statistics fitted on the rows the training windows touch.
pub fn prepare<S: Scalar>(dataset: &STDataset<S>, config: &TrainConfig) -> Result<Prepared<S>> {
    let (t_in, t_out) = (config.model.t_in, config.model.t_out);
    let windows = make_windows(dataset.num_steps(), t_in, t_out)?;
    let splits = split(&windows, &config.split, t_out)?;
    let last = *splits.train.last().ok_or(Error::EmptySplit { which: "train" })?;
    let stats = zscore_fit(dataset, 0..last + t_out + 1)?;
    let normalized = zscore_apply(dataset, &stats)?;
    let nodes: Vec<usize> = (0..dataset.num_nodes()).collect();
    let gather = |d: &STDataset<S>, anchors: &[usize]| d.gather(anchors, &nodes, t_in, t_out);
    let train = gather(&normalized, &splits.train)?;
    let val = gather(&normalized, &splits.val)?;
    let test = gather(&normalized, &splits.test)?;
    let val_raw = gather(dataset, &splits.val)?.1;
    let test_raw = gather(dataset, &splits.test)?.1;
    Ok(Prepared {
        raw: dataset.clone(),
        normalized,
        stats,
        splits,
        t_in,
        t_out,
        train,
        val,
        test,
        val_raw,
        test_raw,
    })
}

impl<S: Scalar> Prepared<S> {
    pub fn raw(&self) -> &STDataset<S> {
        &self.raw
    }

    pub fn normalized(&self) -> &STDataset<S> {
        &self.normalized
    }

    pub fn stats(&self) -> &NormStats<S> {
        &self.stats
    }

    pub fn splits(&self) -> &Splits {
        &self.splits
    }

    pub fn num_nodes(&self) -> usize {
        self.raw.num_nodes()
    }

    pub fn t_in(&self) -> usize {
        self.t_in
    }

    pub fn t_out(&self) -> usize {
        self.t_out
    }

    pub fn anchors(&self, which: SplitName) -> &[usize] {
        match which {
            SplitName::Train => &self.splits.train,
            SplitName::Val => &self.splits.val,
            SplitName::Test => &self.splits.test,
        }
    }

    /// Normalized inputs `[W, T_in, N]`.
    pub fn inputs(&self, which: SplitName) -> &Tensor<S> {
        match which {
            SplitName::Train => &self.train.0,
            SplitName::Val => &self.val.0,
            SplitName::Test => &self.test.0,
        }
    }

    /// Normalized targets `[W, T_out, N]`.
    pub fn targets(&self, which: SplitName) -> &Tensor<S> {
        match which {
            SplitName::Train => &self.train.1,
            SplitName::Val => &self.val.1,
            SplitName::Test => &self.test.1,
        }
    }

    /// Targets in original units; the training split is not kept raw.
    pub fn raw_targets(&self, which: SplitName) -> Result<&Tensor<S>> {
        match which {
            SplitName::Val => Ok(&self.val_raw),
            SplitName::Test => Ok(&self.test_raw),
            SplitName::Train => Err(Error::Contract("raw training targets are not retained".into())),
        }
    }
}
