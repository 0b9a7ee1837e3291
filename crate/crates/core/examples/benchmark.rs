//! Five-seed comparison of vanilla training and every curriculum variant on the
//! planted-difficulty synthetic series.

use std::env;

use stq_core::data::{generate_synthetic, SyntheticConfig};
use stq_core::trainer::{prepare, train, ArchitectureKind, SchedulerKind, TrainConfig};

fn main() -> stq_core::Result<()> {
    let args: Vec<String> = env::args().collect();
    let arch = if args.iter().any(|a| a == "mlp") { ArchitectureKind::Mlp } else { ArchitectureKind::Linear };
    let e0: usize = env::var("E0").ok().and_then(|v| v.parse().ok()).unwrap_or(2);
    let mu: u64 = env::var("MU").ok().and_then(|v| v.parse().ok()).unwrap_or(300);
    let epochs: usize = env::var("EPOCHS").ok().and_then(|v| v.parse().ok()).unwrap_or(100);
    for seed in 1..=5u64 {
        let data = generate_synthetic::<f64>(&SyntheticConfig { seed, ..SyntheticConfig::default() })?;
        let mut config = TrainConfig { seed, max_epochs: epochs, ..TrainConfig::default() };
        config.model.architecture = arch;
        config.curriculum.warm_start_epochs = e0;
        config.curriculum.spatial_step = mu;
        config.curriculum.temporal_step = mu;
        config.curriculum.quantile_step = mu;
        let prep = prepare(&data, &config)?;
        let mut line = format!("seed {seed}:");
        for kind in [SchedulerKind::None, SchedulerKind::Spatial, SchedulerKind::Temporal, SchedulerKind::Quantile, SchedulerKind::All] {
            config.scheduler = kind;
            let (_, report) = train(&prep, &config)?;
            let e3: f64 = report.histories.iter().map(|h| h.val_loss.get(2).copied().unwrap_or(f64::NAN)).sum::<f64>()
                / report.histories.len() as f64;
            let epochs: Vec<usize> = report.histories.iter().map(|h| h.epochs()).collect();
            line.push_str(&format!(
                " {}={:.4} (e3 {:.4}, ep {:?}, {:.1}s)",
                kind.as_str(),
                report.test_qloss,
                e3,
                epochs,
                report.wall_time_secs
            ));
        }
        println!("{line}");
    }
    Ok(())
}
