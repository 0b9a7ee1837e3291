//! `stq`: data generation, training, comparison, efficiency simulation and
//! gradient checks for curriculum quantile forecasting.

mod artifacts;
mod compare;
mod config;
mod exit;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;
use stq_core::data::{generate_synthetic, load_csv, write_csv_string};
use stq_core::efficiency_sim::{reports_csv, simulate, Placement, SchedulerLevel};
use stq_core::forecaster::{random_gradient_cases, GradcheckFamily};
use stq_core::trainer::{prepare, train, SchedulerKind};

use artifacts::{resolve_out, sha256_hex, write, write_json, write_run, RunManifest};
use config::RunConfig;
use exit::{CliError, CliResult};

#[derive(Parser)]
#[command(name = "stq", version, about = "Self-paced curriculum training for quantile forecasting")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the planted-difficulty synthetic dataset as CSV.
    GenData {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train one model (or the fused three-expert ensemble) and write a run directory.
    Train {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        data: PathBuf,
        /// none | spatial | temporal | quantile | all
        #[arg(long)]
        scheduler: Option<String>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Tabulate metrics of two or more run directories.
    Compare {
        #[arg(long, num_args = 1.., required = true)]
        runs: Vec<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Simulate batch-slot utilization of instance and group schedulers.
    SimEff {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Sweep every placement mode instead of the configured one.
        #[arg(long)]
        all_placements: bool,
    },
    /// Compare analytic gradients against central differences on random models.
    Gradcheck {
        /// linear | mlp | both (default: the config's family)
        #[arg(long)]
        spec: Option<String>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.code()
        }
    }
}

fn run(command: Command) -> CliResult<()> {
    match command {
        Command::GenData { config, out } => gen_data(config.as_deref(), &out),
        Command::Train {
            config,
            data,
            scheduler,
            seed,
            out,
        } => train_cmd(config.as_deref(), &data, scheduler.as_deref(), seed, out.as_deref()),
        Command::Compare { runs, out } => compare_cmd(&runs, out.as_deref()),
        Command::SimEff {
            config,
            out,
            all_placements,
        } => sim_eff(config.as_deref(), out.as_deref(), all_placements),
        Command::Gradcheck { spec, seed, config } => gradcheck(spec.as_deref(), seed, config.as_deref()),
    }
}

fn gen_data(config: Option<&Path>, out: &Path) -> CliResult<()> {
    let cfg = RunConfig::load(config)?;
    cfg.synthetic.validate()?;
    let dataset = generate_synthetic::<f64>(&cfg.synthetic)?;
    let csv = write_csv_string(&dataset);
    write(out, &csv)?;
    let manifest = RunManifest::new(
        "gen-data",
        &cfg,
        vec![cfg.synthetic.seed],
        json!({ "path": out.display().to_string(), "sha256": sha256_hex(csv.as_bytes()) }),
    );
    let mut manifest_path = out.as_os_str().to_owned();
    manifest_path.push(".manifest.json");
    write_json(Path::new(&manifest_path), &manifest)?;
    println!(
        "wrote {} ({} steps x {} nodes)",
        out.display(),
        dataset.num_steps(),
        dataset.num_nodes()
    );
    Ok(())
}

fn train_cmd(
    config: Option<&Path>,
    data: &Path,
    scheduler: Option<&str>,
    seed: Option<u64>,
    out: Option<&Path>,
) -> CliResult<()> {
    let mut cfg = RunConfig::load(config)?;
    if let Some(s) = scheduler {
        cfg.train.scheduler = s.parse::<SchedulerKind>()?;
    }
    if let Some(s) = seed {
        cfg.train.seed = s;
    }
    cfg.train.validate()?;
    let bytes = match fs::read(data) {
        Ok(b) => b,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
            return Err(CliError::io(format!("dataset not found: {}", data.display())));
        }
        Err(e) => return Err(CliError::io(format!("cannot read dataset {}: {e}", data.display()))),
    };
    let dataset = load_csv::<f64>(data, cfg.train.model.t_in + cfg.train.model.t_out)?;
    let prep = prepare(&dataset, &cfg.train)?;
    let (trained, report) = train(&prep, &cfg.train)?;
    let dir = resolve_out(
        out,
        &format!("{}-seed{}", cfg.train.scheduler.as_str(), cfg.train.seed),
    );
    let manifest = RunManifest::new(
        "train",
        &cfg,
        vec![cfg.train.seed],
        json!({ "path": data.display().to_string(), "sha256": sha256_hex(&bytes) }),
    );
    write_run(&dir, &manifest, &trained, &report)?;
    println!(
        "{}: test Q-loss {} (best epoch {}), run directory {}",
        cfg.train.scheduler.as_str(),
        report.test_qloss,
        report.best_epoch(),
        dir.display()
    );
    Ok(())
}

fn compare_cmd(runs: &[PathBuf], out: Option<&Path>) -> CliResult<()> {
    let table = compare::compare(runs)?;
    match out {
        Some(dir) => {
            write(&dir.join("compare.csv"), &table.csv)?;
            write_json(&dir.join("compare.json"), &table.json)?;
            println!("wrote {}", dir.display());
        }
        None => print!("{}", table.csv),
    }
    Ok(())
}

fn sim_eff(config: Option<&Path>, out: Option<&Path>, all_placements: bool) -> CliResult<()> {
    let cfg = RunConfig::load(config)?;
    cfg.sim.validate()?;
    let placements: Vec<Placement> = if all_placements {
        Placement::ALL.to_vec()
    } else {
        vec![cfg.sim.placement]
    };
    let mut reports = Vec::new();
    for placement in placements {
        let sim = stq_core::efficiency_sim::SimConfig { placement, ..cfg.sim.clone() };
        for level in SchedulerLevel::ALL {
            match simulate(&sim, level) {
                Ok(r) => reports.push(r),
                Err(stq_core::Error::EmptyInclusion { view }) => eprintln!(
                    "note: {} on {}: every {view} group is hard, nothing left to batch",
                    level.as_str(),
                    placement.as_str()
                ),
                Err(e) => return Err(e.into()),
            }
        }
    }
    let csv = reports_csv(&reports);
    match out {
        Some(path) => {
            write(path, &csv)?;
            println!("wrote {}", path.display());
        }
        None => print!("{csv}"),
    }
    Ok(())
}

fn gradcheck(spec: Option<&str>, seed: u64, config: Option<&Path>) -> CliResult<()> {
    let cfg = RunConfig::load(config)?.gradcheck;
    let family = match spec {
        None => cfg.family,
        Some("linear") => GradcheckFamily::Linear,
        Some("mlp") => GradcheckFamily::Mlp,
        Some("both") => GradcheckFamily::Both,
        Some(other) => {
            return Err(CliError::config(format!(
                "spec: unknown family {other:?}; expected linear|mlp|both"
            )))
        }
    };
    if cfg.cases == 0 {
        return Err(CliError::config("gradcheck.cases: must be at least 1"));
    }
    let cases = random_gradient_cases(cfg.cases, seed, family)?;
    let worst = cases.iter().map(|c| c.max_relative_error).fold(0.0, f64::max);
    println!("gradcheck: {} cases, max relative error {worst:e} (tolerance {:e})", cases.len(), cfg.tolerance);
    if worst < cfg.tolerance {
        Ok(())
    } else {
        Err(CliError::Tolerance(format!(
            "max relative error {worst:e} exceeds {:e}",
            cfg.tolerance
        )))
    }
}
