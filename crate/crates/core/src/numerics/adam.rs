use serde::{Deserialize, Serialize};

use super::Tensor;
use crate::{Error, Result, Scalar};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig<S> {
    pub learning_rate: S,
    pub beta1: S,
    pub beta2: S,
    pub epsilon: S,
}

impl<S: Scalar> Default for AdamConfig<S> {
    fn default() -> Self {
        Self {
            learning_rate: S::lit(1e-3),
            beta1: S::lit(0.9),
            beta2: S::lit(0.999),
            epsilon: S::lit(1e-8),
        }
    }
}

impl<S: Scalar> AdamConfig<S> {
    pub fn with_learning_rate(learning_rate: S) -> Self {
        Self {
            learning_rate,
            ..Self::default()
        }
    }
}

/// Moment estimates and step counter for one flat parameter vector.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamState<S> {
    pub config: AdamConfig<S>,
    first_moment: Vec<S>,
    second_moment: Vec<S>,
    step: u64,
}

impl<S: Scalar> AdamState<S> {
    pub fn new(num_params: usize, config: AdamConfig<S>) -> Self {
        Self {
            config,
            first_moment: vec![S::zero(); num_params],
            second_moment: vec![S::zero(); num_params],
            step: 0,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    pub fn first_moment(&self) -> &[S] {
        &self.first_moment
    }

    pub fn second_moment(&self) -> &[S] {
        &self.second_moment
    }

    /// Applies one bias-corrected Adam update in place.
    pub fn update(&mut self, params: &mut [S], grads: &[S]) -> Result<()> {
        if params.len() != grads.len() || params.len() != self.first_moment.len() {
            return Err(Error::Contract(format!(
                "adam: params {} / grads {} / state {} lengths differ",
                params.len(),
                grads.len(),
                self.first_moment.len()
            )));
        }
        self.step += 1;
        let AdamConfig {
            learning_rate,
            beta1,
            beta2,
            epsilon,
        } = self.config;
        let t = i32::try_from(self.step).unwrap_or(i32::MAX);
        let one = S::one();
        let correction1 = one - beta1.powi(t);
        let correction2 = one - beta2.powi(t);
        for (((p, &g), m), v) in params
            .iter_mut()
            .zip(grads)
            .zip(self.first_moment.iter_mut())
            .zip(self.second_moment.iter_mut())
        {
            *m = beta1 * *m + (one - beta1) * g;
            *v = beta2 * *v + (one - beta2) * g * g;
            let m_hat = *m / correction1;
            let v_hat = *v / correction2;
            *p = *p - learning_rate * m_hat / (v_hat.sqrt() + epsilon);
        }
        Ok(())
    }
}

/// Value-style Adam step: returns the updated parameters and state.
pub fn adam_step<S: Scalar>(
    params: &Tensor<S>,
    grads: &Tensor<S>,
    mut state: AdamState<S>,
) -> Result<(Tensor<S>, AdamState<S>)> {
    if params.shape() != grads.shape() {
        return Err(Error::shape("adam_step", params.shape(), grads.shape()));
    }
    let mut next = params.clone();
    state.update(next.values_mut(), grads.values())?;
    Ok((next, state))
}
