use std::time::Instant;

use stq_core::forecaster::{
    backward, batch_objective, init_params, random_gradient_cases, Architecture, GradcheckFamily, MaskWeights,
    ModelParams, ModelSpec, Sharing, GRADCHECK_FLOOR, GRADCHECK_STEP,
};
use stq_core::numerics::{finite_diff_grad, GradCheck, RandomStream, Tensor};

#[test]
fn random_configurations_match_finite_differences() {
    let start = Instant::now();
    let cases = random_gradient_cases(24, 3, GradcheckFamily::Both).unwrap();
    assert!(cases.len() >= 20);
    assert!(cases.iter().any(|c| matches!(c.spec.architecture, Architecture::Mlp { .. })));
    assert!(cases.iter().any(|c| matches!(c.spec.architecture, Architecture::Linear)));
    for c in &cases {
        assert!(c.max_relative_error < 1e-4, "{c:?}");
    }
    assert!(start.elapsed().as_secs_f64() < 30.0);
}

fn small_problem() -> (ModelParams<f64>, Tensor<f64>, Tensor<f64>) {
    let spec = ModelSpec {
        architecture: Architecture::Mlp { hidden: 5 },
        t_in: 4,
        t_out: 3,
        quantiles: 3,
        sharing: Sharing::Shared,
    };
    let mut st = RandomStream::new(5);
    let params = init_params::<f64>(&spec, &mut st).unwrap();
    let x = Tensor::from_vec(&[2, 4, 2], (0..16).map(|_| st.normal()).collect()).unwrap();
    let y = Tensor::from_vec(&[2, 3, 2], (0..12).map(|_| 3.0 + st.normal()).collect()).unwrap();
    (params, x, y)
}

#[test]
fn corrupted_gradient_is_detected() {
    let (params, x, y) = small_problem();
    let levels = [0.1, 0.5, 0.9];
    let w = MaskWeights::PerQuantile(&levels);
    let spec = *params.spec();
    let analytic = backward(&params, &x, &y, &[0, 1], w, &levels, true).unwrap().grads;
    let objective = |theta: &Tensor<f64>| {
        let p = ModelParams::from_flat(&spec, theta.values().to_vec()).unwrap();
        batch_objective(&p, &x, &y, &[0, 1], w, &levels, true).unwrap()
    };
    let numeric = finite_diff_grad(objective, params.as_tensor(), GRADCHECK_STEP).unwrap();
    assert!(GradCheck::compare(&analytic, &numeric, GRADCHECK_FLOOR).unwrap().max_relative_error < 1e-4);

    let target = analytic.values().iter().position(|g| g.abs() > 1e-3).unwrap();
    let mut corrupted = analytic.clone();
    corrupted.values_mut()[target] *= 1.01;
    let check = GradCheck::compare(&corrupted, &numeric, GRADCHECK_FLOOR).unwrap();
    assert!(check.max_relative_error > 1e-4);
    assert_eq!(check.worst_index, target);
}

#[test]
fn excluded_node_contributes_no_gradient() {
    let spec = ModelSpec {
        architecture: Architecture::Linear,
        t_in: 4,
        t_out: 3,
        quantiles: 3,
        sharing: Sharing::PerNode { nodes: 2 },
    };
    let mut st = RandomStream::new(9);
    let params = init_params::<f64>(&spec, &mut st).unwrap();
    let x = Tensor::from_vec(&[3, 4, 2], (0..24).map(|_| st.normal()).collect()).unwrap();
    let y = Tensor::from_vec(&[3, 3, 2], (0..18).map(|_| st.normal()).collect()).unwrap();
    let levels = [0.1, 0.5, 0.9];
    // Node 1 excluded at every window.
    let mut v = Tensor::filled(&[3, 2, 3], 1.0);
    for b in 0..3 {
        for k in 0..3 {
            v.set(&[b, 1, k], 0.0);
        }
    }
    let g = backward(&params, &x, &y, &[0, 1], MaskWeights::Dense(&v), &levels, true).unwrap();
    let half = spec.num_params() / 2;
    // Per-node layout: W[G, fan_in, fan_out] then b[G, fan_out].
    let (w_len, b_len) = (4 * 9, 9);
    let node1: Vec<usize> = (w_len..2 * w_len).chain(2 * w_len + b_len..2 * w_len + 2 * b_len).collect();
    assert_eq!(node1.len(), half);
    for i in node1 {
        assert_eq!(g.grads.values()[i], 0.0);
    }

    let mut y2 = y.clone();
    for b in 0..3 {
        for t in 0..3 {
            y2.set(&[b, t, 1], 1e6);
        }
    }
    let g2 = backward(&params, &x, &y2, &[0, 1], MaskWeights::Dense(&v), &levels, true).unwrap();
    assert_eq!(g.grads, g2.grads);
    assert_eq!(g.loss, g2.loss);
}
