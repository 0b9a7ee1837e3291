//! Scheduler rules against brute-force elementwise oracles.

use proptest::prelude::*;
use stq_core::curriculum::{
    instance_mask, score_groups, threshold_groups, CurriculumMask, Direction, PaceSettings, PaceState, QuantileRule,
    QuantileSchedule, Scheduler, View,
};
use stq_core::loss_metrics::LossTensor;
use stq_core::numerics::Tensor;

fn loss_tensor() -> impl Strategy<Value = (usize, usize, usize, Vec<f64>)> {
    (1usize..=6, 1usize..=6, 1usize..=3).prop_flat_map(|(n, w, q)| {
        prop::collection::vec(0.0f64..5.0, n * w * q).prop_map(move |v| (n, w, q, v))
    })
}

fn brute_scores(n: usize, w: usize, q: usize, v: &[f64]) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let at = |i: usize, j: usize, k: usize| v[(i * w + j) * q + k];
    let spatial = (0..n)
        .map(|i| {
            let mut s = 0.0;
            for j in 0..w {
                for k in 0..q {
                    s += at(i, j, k);
                }
            }
            s / (w * q) as f64
        })
        .collect();
    let temporal = (0..w)
        .map(|j| {
            let mut s = 0.0;
            for i in 0..n {
                for k in 0..q {
                    s += at(i, j, k);
                }
            }
            s / (n * q) as f64
        })
        .collect();
    let quantile = (0..q)
        .map(|k| {
            let mut s = 0.0;
            for i in 0..n {
                for j in 0..w {
                    s += at(i, j, k);
                }
            }
            s / (n * w) as f64
        })
        .collect();
    (spatial, temporal, quantile)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn dense_expansion_matches_elementwise_rules(
        (n, w, q, v) in loss_tensor(),
        ls in 0.0f64..5.0,
        lt in 0.0f64..5.0,
        lq in 0.0f64..5.0,
        level_seed in prop::collection::vec(0.0f64..1.0, 3),
    ) {
        let l = LossTensor::from_tensor(Tensor::from_vec(&[n, w, q], v.clone()).unwrap()).unwrap();
        let scores = score_groups(&l);
        let (bs, bt, bq) = brute_scores(n, w, q, &v);
        prop_assert_eq!(&scores.spatial, &bs);
        prop_assert_eq!(&scores.temporal, &bt);
        prop_assert_eq!(&scores.quantile, &bq);

        let levels: Vec<f64> = level_seed[..q].to_vec();
        let mut mask = CurriculumMask::full(n, w, &levels);
        mask.restrict(View::Spatial, &threshold_groups(&scores.spatial, ls));
        mask.restrict(View::Temporal, &threshold_groups(&scores.temporal, lt));
        let head_weights: Vec<f64> = scores.quantile.iter().zip(&levels).map(|(&s, &a)| if s < lq { a } else { 0.0 }).collect();
        mask.set_quantiles(stq_core::curriculum::QuantileWeights { levels: levels.clone(), weights: head_weights });
        let dense = mask.expand();
        for i in 0..n {
            for j in 0..w {
                for k in 0..q {
                    let expected = if bs[i] < ls && bt[j] < lt && bq[k] < lq { levels[k] } else { 0.0 };
                    prop_assert_eq!(dense.at(&[i, j, k]), expected);
                }
            }
        }

        let inst = instance_mask(&l, ls);
        for (idx, &x) in v.iter().enumerate() {
            prop_assert_eq!(inst.values()[idx], if x < ls { 1.0 } else { 0.0 });
        }
    }

    #[test]
    fn inclusion_grows_with_lambda(scores in prop::collection::vec(0.0f64..10.0, 1..30), a in 0.0f64..10.0, b in 0.0f64..10.0) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let small = threshold_groups(&scores, lo);
        let large = threshold_groups(&scores, hi);
        prop_assert!(small.iter().all(|i| large.contains(i)));
    }

    #[test]
    fn pace_is_monotone_under_changing_scores(
        rounds in prop::collection::vec(prop::collection::vec(0.0f64..10.0, 8 * 5 * 3), 1..12),
        p0 in 0.0f64..100.0,
        dp in 1.0f64..40.0,
        view_idx in 0usize..3,
    ) {
        let view = View::ALL[view_idx];
        let target = [0.1, 0.5, 0.9];
        let settings = PaceSettings {
            initial_percentile: p0,
            increment: dp,
            step_sizes: [1, 1, 1],
            directions: [Direction::EasyToHard, Direction::EasyToHard, Direction::HardToEasy],
            schedule: QuantileSchedule::hard_to_easy(&target),
            rule: QuantileRule::LevelSchedule,
        };
        let to_scores = |v: &Vec<f64>| score_groups(&LossTensor::from_tensor(Tensor::from_vec(&[8, 5, 3], v.clone()).unwrap()).unwrap());
        let first = to_scores(&rounds[0]);
        let mut trace = Vec::new();
        let mut s = Scheduler::new(view, PaceState::initial(&settings, &first).unwrap(), &first, &target, 0, &mut trace);
        for (it, r) in rounds.iter().enumerate() {
            if s.is_saturated() { break; }
            trace.push(s.update(&to_scores(r), it as u64 + 1));
        }
        for pair in trace.windows(2) {
            prop_assert!(pair[1].lambda >= pair[0].lambda);
            prop_assert!(pair[1].percentile >= pair[0].percentile);
            if view != View::Quantile {
                prop_assert!(pair[1].included >= pair[0].included);
            }
        }
        let mut prev_progress = 0.0;
        for e in &trace {
            prop_assert!(e.included > 0);
            // Effective lower level moves monotonically from 0.02 toward 0.1.
            prop_assert!(e.levels[0] >= prev_progress);
            prev_progress = e.levels[0];
        }
    }
}

#[test]
fn nearest_rank_pace_example() {
    let scores: Vec<f64> = (1..=10).map(|v| 10.0 * v as f64).collect();
    let l = LossTensor::from_tensor(Tensor::from_vec(&[10, 1, 1], scores).unwrap()).unwrap();
    let s = score_groups(&l);
    let settings = PaceSettings {
        initial_percentile: 30.0,
        increment: 10.0,
        step_sizes: [5, 5, 5],
        directions: [Direction::EasyToHard; 3],
        schedule: QuantileSchedule::pinned(&[0.5]),
        rule: QuantileRule::LevelSchedule,
    };
    let p = PaceState::initial(&settings, &s).unwrap();
    assert_eq!(p.spatial.lambda, 30.0);
    assert_eq!(threshold_groups(&s.spatial, p.spatial.lambda), vec![0, 1]);
    let unchanged = stq_core::curriculum::advance_pace(&p, &s, 3);
    assert_eq!(unchanged, p);
    let next = stq_core::curriculum::advance_pace(&p, &s, 5);
    assert_eq!(next.spatial.percentile, 40.0);
    assert_eq!(next.spatial.lambda, 40.0);
}

#[test]
fn saturation_admits_everything() {
    let l = LossTensor::from_tensor(Tensor::from_vec(&[3, 2, 3], vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0]).unwrap()).unwrap();
    let s = score_groups(&l);
    let settings = PaceSettings {
        initial_percentile: 100.0,
        increment: 10.0,
        step_sizes: [1, 1, 1],
        directions: [Direction::EasyToHard, Direction::EasyToHard, Direction::HardToEasy],
        schedule: QuantileSchedule::hard_to_easy(&[0.1, 0.5, 0.9]),
        rule: QuantileRule::LevelSchedule,
    };
    let p = PaceState::initial(&settings, &s).unwrap();
    for view in View::ALL {
        let mut trace = Vec::new();
        let sch = Scheduler::new(view, p.clone(), &s, &[0.1, 0.5, 0.9], 0, &mut trace);
        assert!(sch.is_saturated());
        assert_eq!(sch.mask().expand(), Tensor::filled(&[3, 2, 3], 1.0));
        assert_eq!(sch.mask().levels(), &[0.1, 0.5, 0.9]);
    }
}
