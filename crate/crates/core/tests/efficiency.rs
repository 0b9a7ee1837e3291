use std::time::Instant;

use stq_core::efficiency_sim::{simulate, Placement, SchedulerLevel, SimConfig};

fn cfg(f: f64, placement: Placement) -> SimConfig {
    SimConfig { hard_fraction: f, placement, ..SimConfig::default() }
}

#[test]
fn instance_waste_and_matched_group_waste() {
    let start = Instant::now();
    for f in [0.1, 0.3, 0.5] {
        let r = simulate(&cfg(f, Placement::Independent), SchedulerLevel::Instance).unwrap();
        assert!((r.wasted_fraction - f).abs() <= 0.02);
        let s = simulate(&cfg(f, Placement::NodeCorrelated), SchedulerLevel::SpatialGroup).unwrap();
        assert_eq!(s.wasted_fraction, 0.0);
        let t = simulate(&cfg(f, Placement::TimeCorrelated), SchedulerLevel::TemporalGroup).unwrap();
        assert_eq!(t.wasted_fraction, 0.0);
    }
    assert!(start.elapsed().as_secs_f64() < 10.0);
}

#[test]
fn utilization_is_a_fraction_and_waste_grows_with_f() {
    let mut prev = -1.0;
    for f in [0.0, 0.2, 0.4, 0.6] {
        let r = simulate(&cfg(f, Placement::Independent), SchedulerLevel::Instance).unwrap();
        assert!((0.0..=1.0).contains(&r.utilization_mean));
        assert!(r.wasted_fraction >= prev);
        prev = r.wasted_fraction;
    }
}

#[test]
fn same_seed_same_report() {
    let c = cfg(0.3, Placement::TimeCorrelated);
    assert_eq!(simulate(&c, SchedulerLevel::TemporalGroup).unwrap(), simulate(&c, SchedulerLevel::TemporalGroup).unwrap());
}

#[test]
fn mismatched_group_level_leaves_waste() {
    let r = simulate(&cfg(0.3, Placement::Independent), SchedulerLevel::SpatialGroup).unwrap();
    assert!(r.wasted_fraction > 0.1);
}
