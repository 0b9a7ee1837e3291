use proptest::prelude::*;
use stq_core::data::{generate_synthetic, generate_synthetic_with_truth, make_windows, read_csv, split, write_csv_string, SplitSpec, SyntheticConfig};
use stq_core::Error;

proptest! {
    #[test]
    fn splits_are_ordered_and_disjoint(steps in 60usize..400, t_in in 1usize..13, t_out in 1usize..13) {
        let windows = make_windows(steps, t_in, t_out).unwrap();
        prop_assert_eq!(windows.len(), steps - t_in - t_out + 1);
        if let Ok(s) = split(&windows, &SplitSpec::default(), t_out) {
            // Targets of one split never reach into the next split's targets.
            prop_assert!(s.train.last().unwrap() + t_out <= s.val[0]);
            prop_assert!(s.val.last().unwrap() + t_out <= s.test[0]);
        }
    }

    #[test]
    fn csv_round_trip_is_stable(seed in 0u64..50, nodes in 1usize..6) {
        let cfg = SyntheticConfig { nodes, steps: 60, period: 12, seed, ..SyntheticConfig::default() };
        let d = generate_synthetic::<f64>(&cfg).unwrap();
        let text = write_csv_string(&d);
        let back = read_csv::<f64>(&text, 1).unwrap();
        prop_assert_eq!(write_csv_string(&back), text);
        prop_assert_eq!(back.values(), d.values());
    }
}

#[test]
fn generator_is_seeded_and_plants_difficulty() {
    let cfg = SyntheticConfig { seed: 9, ..SyntheticConfig::default() };
    let a = generate_synthetic_with_truth::<f64>(&cfg).unwrap();
    let b = generate_synthetic_with_truth::<f64>(&cfg).unwrap();
    assert_eq!(a.dataset.values(), b.dataset.values());
    assert_eq!(a.hard_nodes.len(), 4);
    assert!(!a.shifted_spans.is_empty());
    let other = generate_synthetic::<f64>(&SyntheticConfig { seed: 10, ..cfg }).unwrap();
    assert_ne!(other.values(), a.dataset.values());
}

#[test]
fn invalid_fraction_names_its_field() {
    let err = generate_synthetic::<f64>(&SyntheticConfig { hard_node_fraction: 1.5, ..SyntheticConfig::default() }).unwrap_err();
    assert!(matches!(err, Error::Config { ref field, .. } if field == "synthetic.hard_node_fraction"), "{err}");
}

#[test]
fn too_short_series_is_rejected() {
    assert!(matches!(make_windows(20, 12, 12), Err(Error::InsufficientLength { required: 24, got: 20 })));
}
