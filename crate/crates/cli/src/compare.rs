use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde_json::{json, Map, Value};

use crate::exit::{CliError, CliResult};

pub const METRICS: [&str; 6] = ["rmse", "mae", "mape", "q10", "q50", "q90"];

struct Run {
    variant: String,
    /// horizon -> metric -> value
    metrics: BTreeMap<usize, BTreeMap<String, f64>>,
}

fn read_json(path: &Path) -> CliResult<Value> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::io(format!("malformed {}: {e}", path.display())))
}

fn load_run(dir: &Path) -> CliResult<Run> {
    let manifest = read_json(&dir.join("config.json"))?;
    let variant = manifest["config"]["train"]["scheduler"]
        .as_str()
        .ok_or_else(|| CliError::io(format!("{}: manifest has no scheduler", dir.display())))?
        .to_string();
    let metrics_json = read_json(&dir.join("metrics.json"))?;
    let obj = metrics_json
        .as_object()
        .ok_or_else(|| CliError::io(format!("{}: metrics.json is not an object", dir.display())))?;
    let mut metrics = BTreeMap::new();
    for (h, row) in obj {
        let horizon: usize = h
            .parse()
            .map_err(|_| CliError::io(format!("{}: bad horizon key {h:?}", dir.display())))?;
        let mut values = BTreeMap::new();
        for (k, v) in row.as_object().into_iter().flatten() {
            if let Some(x) = v.as_f64() {
                values.insert(k.clone(), x);
            }
        }
        metrics.insert(horizon, values);
    }
    Ok(Run { variant, metrics })
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = if xs.len() > 1 {
        xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    (mean, var.sqrt())
}

/// Side-by-side table: rows `(variant, horizon)`, mean (and sample std when any
/// variant has repeated seeds) per metric, plus the metrics each row wins.
pub struct Comparison {
    pub csv: String,
    pub json: Value,
}

pub fn compare(dirs: &[PathBuf]) -> CliResult<Comparison> {
    if dirs.len() < 2 {
        return Err(CliError::config("compare needs at least 2 run directories"));
    }
    let runs = dirs.iter().map(|d| load_run(d)).collect::<CliResult<Vec<_>>>()?;
    let horizons: Vec<usize> = runs[0].metrics.keys().copied().collect();
    for (run, dir) in runs.iter().zip(dirs) {
        let hs: Vec<usize> = run.metrics.keys().copied().collect();
        if hs != horizons {
            return Err(CliError::config(format!(
                "incompatible horizons: {} has {hs:?}, expected {horizons:?}",
                dir.display()
            )));
        }
    }
    // Variants keep first-appearance order.
    let mut variants: Vec<String> = Vec::new();
    for r in &runs {
        if !variants.contains(&r.variant) {
            variants.push(r.variant.clone());
        }
    }
    let grouped = variants.iter().any(|v| runs.iter().filter(|r| &r.variant == v).count() > 1);

    // stats[variant][horizon][metric] = (mean, std)
    let mut stats: Vec<Vec<BTreeMap<&str, (f64, f64)>>> = Vec::new();
    for v in &variants {
        let members: Vec<&Run> = runs.iter().filter(|r| &r.variant == v).collect();
        let mut per_h = Vec::new();
        for h in &horizons {
            let mut row = BTreeMap::new();
            for m in METRICS {
                let xs: Vec<f64> = members.iter().filter_map(|r| r.metrics[h].get(m).copied()).collect();
                if !xs.is_empty() {
                    row.insert(m, mean_std(&xs));
                }
            }
            per_h.push(row);
        }
        stats.push(per_h);
    }

    let mut header = vec!["variant".to_string(), "horizon".to_string(), "runs".to_string()];
    for m in METRICS {
        header.push(m.to_string());
        if grouped {
            header.push(format!("{m}_std"));
        }
    }
    header.push("winner".to_string());
    let mut csv = header.join(",");
    csv.push('\n');
    let mut rows = Vec::new();
    for (vi, v) in variants.iter().enumerate() {
        let count = runs.iter().filter(|r| &r.variant == v).count();
        for (hi, h) in horizons.iter().enumerate() {
            let mut cells = vec![v.clone(), h.to_string(), count.to_string()];
            let mut obj = Map::new();
            obj.insert("variant".into(), json!(v));
            obj.insert("horizon".into(), json!(h));
            obj.insert("runs".into(), json!(count));
            let mut wins = Vec::new();
            for m in METRICS {
                let cell = stats[vi][hi].get(m).copied();
                match cell {
                    Some((mean, std)) => {
                        cells.push(mean.to_string());
                        if grouped {
                            cells.push(std.to_string());
                        }
                        obj.insert(m.into(), json!(mean));
                        if grouped {
                            obj.insert(format!("{m}_std"), json!(std));
                        }
                        let best = stats
                            .iter()
                            .filter_map(|s| s[hi].get(m).map(|c| c.0))
                            .fold(f64::INFINITY, f64::min);
                        if mean == best {
                            wins.push(m);
                        }
                    }
                    None => {
                        cells.push(String::new());
                        if grouped {
                            cells.push(String::new());
                        }
                    }
                }
            }
            cells.push(wins.join(";"));
            obj.insert("winner".into(), json!(wins));
            csv.push_str(&cells.join(","));
            csv.push('\n');
            rows.push(Value::Object(obj));
        }
    }
    Ok(Comparison {
        csv,
        json: json!({ "rows": rows }),
    })
}
