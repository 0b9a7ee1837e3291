use proptest::prelude::*;
use stq_core::loss_metrics::{instance_loss_tensor, mean_quantile_loss, pinball, quantile_report, QuantileSet};
use stq_core::numerics::{RandomStream, Tensor};
use stq_core::Error;

/// Brute-force scan of candidate constants; returns the minimizer of summed pinball.
fn scan_minimizer(samples: &[f64], alpha: f64, candidates: &[f64]) -> f64 {
    let mut best = (f64::INFINITY, candidates[0]);
    for &c in candidates {
        let loss: f64 = samples.iter().map(|&y| pinball(y, c, alpha)).sum();
        if loss < best.0 {
            best = (loss, c);
        }
    }
    best.1
}

fn empirical_rank(sorted: &[f64], x: f64) -> f64 {
    sorted.partition_point(|&v| v <= x) as f64 / sorted.len() as f64 * 100.0
}

#[test]
fn constant_fit_recovers_empirical_quantile() {
    let mut rng = RandomStream::new(11);
    let samples: Vec<f64> = (0..10_000).map(|_| 3.0 + 2.0 * rng.normal()).collect();
    let mut sorted = samples.clone();
    sorted.sort_by(f64::total_cmp);
    let candidates: Vec<f64> = (0..=400).map(|i| sorted[0] + (sorted[9999] - sorted[0]) * i as f64 / 400.0).collect();
    for alpha in [0.1, 0.5, 0.9] {
        let c = scan_minimizer(&samples, alpha, &candidates);
        let rank = empirical_rank(&sorted, c);
        assert!((rank - alpha * 100.0).abs() <= 2.0, "alpha {alpha}: rank {rank}");
    }
}

fn report_inputs() -> impl Strategy<Value = (usize, usize, usize, Vec<f64>, Vec<f64>)> {
    (1usize..5, 1usize..5, 1usize..5).prop_flat_map(|(w, t, n)| {
        (
            Just(w),
            Just(t),
            Just(n),
            prop::collection::vec(-50.0f64..50.0, w * t * n * 3),
            prop::collection::vec(prop_oneof![1.0f64..100.0, -100.0f64..-1.0], w * t * n),
        )
    })
}

proptest! {
    #[test]
    fn median_loss_is_half_mae((w, t, n, p, y) in report_inputs()) {
        let q = QuantileSet::new(vec![0.1, 0.5, 0.9]).unwrap();
        let preds = Tensor::from_vec(&[w, t, n, 3], p).unwrap();
        let targets = Tensor::from_vec(&[w, t, n], y).unwrap();
        let horizons: Vec<usize> = (1..=t).collect();
        let report = quantile_report(&preds, &targets, &q, &horizons).unwrap();
        for row in &report.horizons {
            prop_assert_eq!(row.quantile_loss(0.5).unwrap(), row.mae / 2.0);
        }
    }

    #[test]
    fn pinball_is_nonnegative_and_zero_on_target(y in -1e3f64..1e3, e in -1e3f64..1e3, a in 0.01f64..0.99) {
        prop_assert!(pinball(y, y + e, a) >= 0.0);
        prop_assert_eq!(pinball(y, y, a), 0.0);
    }

    #[test]
    fn instance_losses_average_to_global_mean((w, t, n, p, y) in report_inputs()) {
        let levels = [0.1, 0.5, 0.9];
        let preds = Tensor::from_vec(&[w, t, n, 3], p).unwrap();
        let targets = Tensor::from_vec(&[w, t, n], y).unwrap();
        let l = instance_loss_tensor(&preds, &targets, &levels).unwrap();
        let mean = l.tensor().values().iter().sum::<f64>() / l.tensor().len() as f64;
        let global = mean_quantile_loss(&preds, &targets, &levels).unwrap();
        prop_assert!((mean - global).abs() <= 1e-9 * global.max(1.0));
    }
}

#[test]
fn perfect_predictions_score_zero() {
    let q = QuantileSet::new(vec![0.1, 0.5, 0.9]).unwrap();
    let y: Vec<f64> = (1..=24).map(|v| v as f64).collect();
    let targets = Tensor::from_vec(&[2, 3, 4], y.clone()).unwrap();
    let preds = Tensor::from_vec(&[2, 3, 4, 3], y.iter().flat_map(|&v| [v, v, v]).collect()).unwrap();
    let report = quantile_report(&preds, &targets, &q, &[1, 3]).unwrap();
    for row in &report.horizons {
        assert_eq!((row.rmse, row.mae, row.mape), (0.0, 0.0, 0.0));
        assert!(row.quantile_losses.iter().all(|&(_, l)| l == 0.0));
    }
}

#[test]
fn constant_median_metrics_by_hand() {
    // Targets 1, 2, 3, 4 at one horizon, every head predicting 2.
    let q = QuantileSet::new(vec![0.1, 0.5, 0.9]).unwrap();
    let targets = Tensor::from_vec(&[1, 1, 4], vec![1.0, 2.0, 3.0, 4.0]).unwrap();
    let preds = Tensor::filled(&[1, 1, 4, 3], 2.0);
    let row = quantile_report(&preds, &targets, &q, &[1]).unwrap().horizons[0].clone();
    assert_eq!(row.mae, 1.0);
    assert_eq!(row.rmse, 1.5f64.sqrt());
    assert!((row.mape - (1.0 + 0.0 + 1.0 / 3.0 + 0.5) / 4.0 * 100.0).abs() < 1e-12);
    assert_eq!(row.quantile_loss(0.5), Some(0.5));
    // q=0.1: under-predictions of 1, 2 cost 0.1 each; the over-prediction of 1 costs 0.9.
    assert!((row.quantile_loss(0.1).unwrap() - (0.9 + 0.1 + 0.2) / 4.0).abs() < 1e-12);
}

#[test]
fn horizon_beyond_output_is_rejected() {
    let q = QuantileSet::new(vec![0.1, 0.5, 0.9]).unwrap();
    let targets = Tensor::filled(&[2, 12, 3], 1.0);
    let preds = Tensor::filled(&[2, 12, 3, 3], 1.0);
    let err = quantile_report(&preds, &targets, &q, &[13]).unwrap_err();
    assert!(matches!(err, Error::Horizon { horizon: 13, t_out: 12 }));
}

#[test]
fn published_q50_tracks_half_mae() {
    // (MAE, Q50) pairs from a published benchmark table; the identity holds to about 1.2%.
    for (mae, q50) in [(19.167, 9.702), (18.689, 9.463), (3.132, 1.566), (3.027, 1.514)] {
        let ratio: f64 = q50 / (mae / 2.0);
        assert!((ratio - 1.0).abs() < 0.02, "{mae} {q50}");
    }
}
