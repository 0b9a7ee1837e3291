use super::Tensor;
use crate::{Error, Result, Scalar};

/// Central-difference gradient `(f(x + h e_i) - f(x - h e_i)) / 2h`.
pub fn finite_diff_grad<S, F>(f: F, x: &Tensor<S>, h: S) -> Result<Tensor<S>>
where
    S: Scalar,
    F: Fn(&Tensor<S>) -> S,
{
    if !(h > S::zero()) {
        return Err(Error::Contract("finite difference step must be positive".into()));
    }
    let mut probe = x.clone();
    let mut grad = Vec::with_capacity(x.len());
    let two_h = h + h;
    for i in 0..x.len() {
        let original = probe.values()[i];
        probe.values_mut()[i] = original + h;
        let up = f(&probe);
        probe.values_mut()[i] = original - h;
        let down = f(&probe);
        probe.values_mut()[i] = original;
        if !up.is_finite() || !down.is_finite() {
            return Err(Error::NonFinite { coordinate: i });
        }
        grad.push((up - down) / two_h);
    }
    Tensor::from_vec(x.shape(), grad)
}

/// Relative error used by gradient checks; differences below `abs_floor` count as zero.
pub fn relative_error(analytic: f64, numeric: f64, abs_floor: f64) -> f64 {
    let diff = (analytic - numeric).abs();
    if diff < abs_floor {
        return 0.0;
    }
    diff / analytic.abs().max(numeric.abs())
}

/// Elementwise comparison summary between an analytic and a numeric gradient.
#[derive(Clone, Debug, PartialEq)]
pub struct GradCheck {
    pub max_relative_error: f64,
    pub worst_index: usize,
}

impl GradCheck {
    pub fn compare<S: Scalar>(analytic: &Tensor<S>, numeric: &Tensor<S>, abs_floor: f64) -> Result<Self> {
        if analytic.shape() != numeric.shape() {
            return Err(Error::shape("gradcheck", analytic.shape(), numeric.shape()));
        }
        let mut out = GradCheck {
            max_relative_error: 0.0,
            worst_index: 0,
        };
        for (i, (a, n)) in analytic.values().iter().zip(numeric.values()).enumerate() {
            let err = relative_error(a.as_f64(), n.as_f64(), abs_floor);
            if err > out.max_relative_error {
                out.max_relative_error = err;
                out.worst_index = i;
            }
        }
        Ok(out)
    }
}
