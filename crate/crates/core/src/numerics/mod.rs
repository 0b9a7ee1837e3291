//! Dense tensors, the Adam optimizer, a central-difference gradient oracle and
//! counter-based random streams.
//!
//! Every reduction in the crate walks indices left to right in row-major order so
//! repeated runs are bit-identical.

mod adam;
mod gradcheck;
mod random;
mod tensor;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use gradcheck::{finite_diff_grad, relative_error, GradCheck};
pub use random::{derive_stream, RandomStream};
pub use tensor::Tensor;

use crate::Scalar;

/// Left-to-right sum.
pub fn sum<S: Scalar>(xs: &[S]) -> S {
    let mut acc = S::zero();
    for &x in xs {
        acc = acc + x;
    }
    acc
}

/// Left-to-right mean; zero for an empty slice.
pub fn mean<S: Scalar>(xs: &[S]) -> S {
    if xs.is_empty() {
        return S::zero();
    }
    sum(xs) / S::from_usize_lossy(xs.len())
}

/// Nearest-rank percentile: the smallest value with at least `p`% of the sample at or below it.
///
/// `p` is clamped to `[0, 100]`; `p = 0` returns the minimum.
pub fn nearest_rank_percentile<S: Scalar>(values: &[S], p: f64) -> Option<S> {
    if values.is_empty() {
        return None;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite scores"));
    let n = sorted.len();
    let p = p.clamp(0.0, 100.0);
    let rank = ((p / 100.0) * n as f64).ceil() as usize;
    Some(sorted[rank.clamp(1, n) - 1])
}
