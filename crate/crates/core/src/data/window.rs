use serde::{Deserialize, Serialize};

use crate::numerics::Tensor;
use crate::{Error, Result};

/// One `(input, target)` pair anchored at the last input step `anchor`.
#[derive(Clone, Debug, PartialEq)]
pub struct WindowSample<S> {
    pub anchor: usize,
    /// `[T_in, N]`
    pub input: Tensor<S>,
    /// `[T_out, N]`
    pub target: Tensor<S>,
}

/// Anchors of every stride-1 window: `T_in - 1 ..= T_total - T_out - 1`.
pub fn make_windows(total_steps: usize, t_in: usize, t_out: usize) -> Result<Vec<usize>> {
    if t_in == 0 || t_out == 0 {
        return Err(Error::Contract("T_in and T_out must be positive".into()));
    }
    let required = t_in + t_out;
    if total_steps < required {
        return Err(Error::InsufficientLength {
            required,
            got: total_steps,
        });
    }
    Ok((t_in - 1..total_steps - t_out).collect())
}

/// Chronological train / validation / test fractions.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train: f64,
    pub val: f64,
    pub test: f64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self::new(0.6, 0.2, 0.2).expect("valid default split")
    }
}

impl SplitSpec {
    pub fn new(train: f64, val: f64, test: f64) -> Result<Self> {
        let spec = Self { train, val, test };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, f) in [("split.train", self.train), ("split.val", self.val), ("split.test", self.test)] {
            if !(f > 0.0 && f < 1.0) {
                return Err(Error::config(name, format!("{f} is not in (0, 1)")));
            }
        }
        if (self.train + self.val + self.test - 1.0).abs() > 1e-9 {
            return Err(Error::config("split", "fractions must sum to 1"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Splits {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

/// Chronological split of window anchors by count.
///
/// A window stays on its side only if its whole target block ends before the first
/// target step of the next split; otherwise it is dropped, so no target step is
/// shared across splits. With `t_out = 1` and consecutive anchors nothing is dropped.
pub fn split(windows: &[usize], spec: &SplitSpec, t_out: usize) -> Result<Splits> {
    spec.validate()?;
    if windows.is_empty() {
        return Err(Error::EmptySplit { which: "train" });
    }
    if windows.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Contract("window anchors must be strictly increasing".into()));
    }
    let n = windows.len();
    let n_train = ((spec.train * n as f64).round() as usize).min(n);
    let n_val = ((spec.val * n as f64).round() as usize).min(n - n_train);
    let (train, rest) = windows.split_at(n_train);
    let (val, test) = rest.split_at(n_val);

    let fits_before = |side: &[usize], next: &[usize]| -> Vec<usize> {
        match next.first() {
            Some(&boundary) => side.iter().copied().filter(|&a| a + t_out <= boundary).collect(),
            None => side.to_vec(),
        }
    };
    let out = Splits {
        train: fits_before(train, val),
        val: fits_before(val, test),
        test: test.to_vec(),
    };
    for (which, part) in [("train", &out.train), ("val", &out.val), ("test", &out.test)] {
        if part.is_empty() {
            return Err(Error::EmptySplit { which });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn window_counts() {
        assert_eq!(make_windows(30, 12, 12).unwrap().len(), 7);
        assert_eq!(make_windows(24, 12, 12).unwrap(), vec![11]);
        match make_windows(23, 12, 12) {
            Err(Error::InsufficientLength { required: 24, got: 23 }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn ratio_splits() {
        let w: Vec<usize> = (0..100).collect();
        let s = split(&w, &SplitSpec::new(0.6, 0.2, 0.2).unwrap(), 1).unwrap();
        assert_eq!((s.train.len(), s.val.len(), s.test.len()), (60, 20, 20));
        let s = split(&w, &SplitSpec::new(0.7, 0.1, 0.2).unwrap(), 1).unwrap();
        assert_eq!((s.train.len(), s.val.len(), s.test.len()), (70, 10, 20));
    }

    #[test]
    fn single_window_leaves_val_empty() {
        assert!(matches!(
            split(&[5], &SplitSpec::default(), 1),
            Err(Error::EmptySplit { which: "val" })
        ));
    }

    #[test]
    fn straddling_targets_are_dropped() {
        let w: Vec<usize> = (11..111).collect();
        let s = split(&w, &SplitSpec::default(), 12).unwrap();
        // first val anchor is 71; train anchors must satisfy a + 12 <= 71.
        assert_eq!(*s.train.last().unwrap(), 59);
        assert_eq!(s.train.len(), 49);
        assert_eq!(s.val.len(), 9);
        assert_eq!(s.test.len(), 20);
    }

    #[test]
    fn invalid_spec_names_field() {
        match SplitSpec::new(1.5, 0.2, 0.2) {
            Err(Error::Config { field, .. }) => assert_eq!(field, "split.train"),
            other => panic!("unexpected {other:?}"),
        }
        assert!(SplitSpec::new(0.5, 0.2, 0.2).is_err());
    }

    proptest! {
        #[test]
        fn window_count_formula(t_in in 1usize..30, t_out in 1usize..30, extra in 0usize..200) {
            let total = t_in + t_out + extra;
            let w = make_windows(total, t_in, t_out).unwrap();
            prop_assert_eq!(w.len(), total - t_in - t_out + 1);
            prop_assert!(w.windows(2).all(|p| p[1] == p[0] + 1));
        }

        #[test]
        fn splits_are_ordered_and_disjoint(n in 10usize..400, t_out in 1usize..13) {
            let w: Vec<usize> = (11..11 + n).collect();
            if let Ok(s) = split(&w, &SplitSpec::default(), t_out) {
                prop_assert!(s.train.last() < s.val.first());
                prop_assert!(s.val.last() < s.test.first());
                // no target step shared across splits
                prop_assert!(s.train.last().unwrap() + t_out <= *s.val.first().unwrap());
                prop_assert!(s.val.last().unwrap() + t_out <= *s.test.first().unwrap());
                let total = s.train.len() + s.val.len() + s.test.len();
                let dropped = w.len() - total;
                prop_assert!(dropped <= 2 * (t_out - 1));
            }
        }
    }
}
