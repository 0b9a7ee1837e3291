use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const SMALL: &str = r#"{
  "synthetic": { "nodes": 4, "steps": 500, "period": 48, "seed": 2 },
  "train": { "max_epochs": 3, "batch_size": 16, "curriculum": { "warm_start_epochs": 1, "spatial_step": 20, "temporal_step": 20, "quantile_step": 20 } },
  "sim": { "iterations": 50 }
}"#;

fn stq(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stq")).args(args).current_dir(cwd).output().expect("run stq")
}

fn setup() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("small.json"), SMALL).unwrap();
    dir
}

#[test]
fn gen_data_is_reproducible_and_writes_a_manifest() {
    let dir = setup();
    let p = dir.path();
    assert!(stq(&["gen-data", "--config", "small.json", "--out", "a.csv"], p).status.success());
    assert!(stq(&["gen-data", "--config", "small.json", "--out", "b.csv"], p).status.success());
    let a = fs::read(p.join("a.csv")).unwrap();
    assert_eq!(a, fs::read(p.join("b.csv")).unwrap());
    assert_eq!(String::from_utf8_lossy(&a).lines().count(), 501);
    let manifest: serde_json::Value = serde_json::from_slice(&fs::read(p.join("a.csv.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["dataset"]["sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn invalid_config_exits_2_and_names_the_field() {
    let dir = setup();
    fs::write(dir.path().join("bad.json"), r#"{ "synthetic": { "hard_node_fraction": 1.5 } }"#).unwrap();
    let o = stq(&["gen-data", "--config", "bad.json", "--out", "x.csv"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("synthetic.hard_node_fraction"));

    let o = stq(&["train", "--data", "x.csv", "--scheduler", "sideways"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn missing_dataset_exits_1() {
    let dir = setup();
    let o = stq(&["train", "--data", "nope.csv"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("dataset not found"));
}

#[test]
fn train_and_compare_runs() {
    let dir = setup();
    let p = dir.path();
    assert!(stq(&["gen-data", "--config", "small.json", "--out", "d.csv"], p).status.success());
    for (sched, out) in [("none", "r0"), ("none", "r1"), ("temporal", "r2")] {
        let seed = if out == "r1" { "1" } else { "0" };
        let o = stq(&["train", "--config", "small.json", "--data", "d.csv", "--scheduler", sched, "--seed", seed, "--out", out], p);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    for f in ["config.json", "losses.csv", "pace_trace.csv", "metrics.json", "metrics.csv", "checkpoints/model.json", "summary.json", "timing.json"] {
        assert!(p.join("r2").join(f).exists(), "missing {f}");
    }
    let o = stq(&["compare", "--runs", "r0", "r1", "r2"], p);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = String::from_utf8(o.stdout).unwrap();
    let header = csv.lines().next().unwrap();
    assert!(header.contains("_std") && header.contains("winner"), "{header}");
    assert!(csv.contains("temporal"));

    let o = stq(&["compare", "--runs", "r0"], p);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn default_output_goes_under_the_output_root() {
    let dir = setup();
    let p = dir.path();
    assert!(stq(&["gen-data", "--config", "small.json", "--out", "d.csv"], p).status.success());
    let o = Command::new(env!("CARGO_BIN_EXE_stq"))
        .args(["train", "--config", "small.json", "--data", "d.csv", "--scheduler", "all", "--seed", "3"])
        .current_dir(p)
        .env("STQ_OUTPUT_ROOT", p.join("out"))
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let run = p.join("out/all-seed3");
    assert!(run.join("checkpoints/fusion.json").exists());
    assert!(run.join("checkpoints/expert_quantile.json").exists());
}

#[test]
fn sim_eff_writes_csv() {
    let dir = setup();
    let o = stq(&["sim-eff", "--config", "small.json", "--all-placements", "--out", "sim.csv"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(dir.path().join("sim.csv")).unwrap();
    assert!(csv.starts_with("scheduler,mode,f,utilization_mean"));
    assert_eq!(csv.lines().count(), 10);
}

#[test]
fn gradcheck_passes() {
    let dir = setup();
    let o = stq(&["gradcheck", "--spec", "both", "--seed", "4"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
}
