//! Monte Carlo model of batch-slot usage under stratified sampling.
//!
//! Each iteration draws a `b × N` matrix of hard/easy instances (rows are time
//! windows, columns nodes). An instance-level scheduler masks hard entries in
//! place, leaving gaps that still occupy compute. Group schedulers drop whole
//! columns (spatial) or swap whole rows for freshly drawn ones (temporal); a
//! group is dropped when more than half of it is hard, and hard entries left in
//! retained groups are masked like instance gaps.

use serde::{Deserialize, Serialize};

use crate::numerics::RandomStream;
use crate::{Error, Result};

/// Redraws allowed per row before the temporal scheduler gives up on it.
pub const RESAMPLE_CAP: usize = 1000;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Placement {
    /// Every entry is hard with probability `f`.
    #[default]
    Independent,
    /// `round(f·N)` nodes are hard across the whole batch.
    NodeCorrelated,
    /// Every window (row) is hard with probability `f`.
    TimeCorrelated,
}

impl Placement {
    pub const ALL: [Placement; 3] = [Placement::Independent, Placement::NodeCorrelated, Placement::TimeCorrelated];

    pub fn as_str(self) -> &'static str {
        match self {
            Placement::Independent => "independent",
            Placement::NodeCorrelated => "node_correlated",
            Placement::TimeCorrelated => "time_correlated",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchedulerLevel {
    Instance,
    SpatialGroup,
    TemporalGroup,
}

impl SchedulerLevel {
    pub const ALL: [SchedulerLevel; 3] = [
        SchedulerLevel::Instance,
        SchedulerLevel::SpatialGroup,
        SchedulerLevel::TemporalGroup,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SchedulerLevel::Instance => "instance",
            SchedulerLevel::SpatialGroup => "spatial_group",
            SchedulerLevel::TemporalGroup => "temporal_group",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub nodes: usize,
    pub batch_groups: usize,
    pub hard_fraction: f64,
    pub placement: Placement,
    pub iterations: usize,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            nodes: 20,
            batch_groups: 32,
            hard_fraction: 0.3,
            placement: Placement::Independent,
            iterations: 1000,
            seed: 0,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.hard_fraction) {
            return Err(Error::config("sim.hard_fraction", format!("{} is not in [0, 1]", self.hard_fraction)));
        }
        if self.nodes == 0 {
            return Err(Error::config("sim.nodes", "must be at least 1"));
        }
        if self.batch_groups == 0 {
            return Err(Error::config("sim.batch_groups", "must be at least 1"));
        }
        if self.iterations == 0 {
            return Err(Error::config("sim.iterations", "must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub scheduler: SchedulerLevel,
    pub placement: Placement,
    pub hard_fraction: f64,
    /// Mean over iterations of useful / occupied slots.
    pub utilization_mean: f64,
    pub utilization_std: f64,
    /// Total gaps over total occupied slots.
    pub wasted_fraction: f64,
    /// Useful slots per iteration.
    pub throughput: f64,
    /// Mean matrix shape after the scheduler acted (empty iterations count as 0).
    pub mean_rows: f64,
    pub mean_columns: f64,
    pub iterations: usize,
    /// Iterations where the scheduler left nothing to batch.
    pub empty_iterations: usize,
}

impl SimReport {
    pub const CSV_HEADER: &'static str =
        "scheduler,mode,f,utilization_mean,utilization_std,wasted_fraction,throughput,mean_rows,mean_columns,iterations,empty_iterations";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{}",
            self.scheduler.as_str(),
            self.placement.as_str(),
            self.hard_fraction,
            self.utilization_mean,
            self.utilization_std,
            self.wasted_fraction,
            self.throughput,
            self.mean_rows,
            self.mean_columns,
            self.iterations,
            self.empty_iterations
        )
    }
}

pub fn reports_csv(reports: &[SimReport]) -> String {
    let mut out = String::from(SimReport::CSV_HEADER);
    out.push('\n');
    for r in reports {
        out.push_str(&r.csv_row());
        out.push('\n');
    }
    out
}

/// Row-major `b × N` hardness matrix.
struct Matrix {
    rows: Vec<Vec<bool>>,
}

fn draw_row(cfg: &SimConfig, hard_nodes: &[bool], stream: &mut RandomStream) -> Vec<bool> {
    let f = cfg.hard_fraction;
    match cfg.placement {
        Placement::Independent => (0..cfg.nodes).map(|_| stream.bernoulli(f)).collect(),
        Placement::NodeCorrelated => hard_nodes.to_vec(),
        Placement::TimeCorrelated => vec![stream.bernoulli(f); cfg.nodes],
    }
}

fn draw_matrix(cfg: &SimConfig, stream: &mut RandomStream) -> (Matrix, Vec<bool>) {
    let mut hard_nodes = vec![false; cfg.nodes];
    if cfg.placement == Placement::NodeCorrelated {
        let k = (cfg.hard_fraction * cfg.nodes as f64).round() as usize;
        for i in stream.choose_indices(cfg.nodes, k.min(cfg.nodes)) {
            hard_nodes[i] = true;
        }
    }
    let rows = (0..cfg.batch_groups).map(|_| draw_row(cfg, &hard_nodes, stream)).collect();
    (Matrix { rows }, hard_nodes)
}

fn majority_hard(count: usize, of: usize) -> bool {
    2 * count > of
}

/// (occupied, wasted, rows, columns) after the scheduler acts on one matrix.
fn apply(
    level: SchedulerLevel,
    cfg: &SimConfig,
    m: Matrix,
    hard_nodes: &[bool],
    resample: &mut RandomStream,
) -> Result<(usize, usize, usize, usize)> {
    let (b, n) = (m.rows.len(), cfg.nodes);
    match level {
        SchedulerLevel::Instance => {
            let wasted = m.rows.iter().flatten().filter(|&&h| h).count();
            Ok((b * n, wasted, b, n))
        }
        SchedulerLevel::SpatialGroup => {
            let kept: Vec<usize> = (0..n)
                .filter(|&c| !majority_hard(m.rows.iter().filter(|r| r[c]).count(), b))
                .collect();
            if kept.is_empty() {
                return Err(Error::EmptyInclusion { view: "node" });
            }
            let wasted = m.rows.iter().map(|r| kept.iter().filter(|&&c| r[c]).count()).sum();
            Ok((b * kept.len(), wasted, b, kept.len()))
        }
        SchedulerLevel::TemporalGroup => {
            let mut rows = Vec::with_capacity(b);
            for row in m.rows {
                let mut row = row;
                let mut tries = 0;
                while majority_hard(row.iter().filter(|&&h| h).count(), n) && tries < RESAMPLE_CAP {
                    row = draw_row(cfg, hard_nodes, resample);
                    tries += 1;
                }
                if !majority_hard(row.iter().filter(|&&h| h).count(), n) {
                    rows.push(row);
                }
            }
            if rows.is_empty() {
                return Err(Error::EmptyInclusion { view: "window" });
            }
            let wasted = rows.iter().flatten().filter(|&&h| h).count();
            Ok((rows.len() * n, wasted, rows.len(), n))
        }
    }
}

/// Runs `cfg.iterations` draws. Every scheduler level sees the same matrices for
/// a given seed and placement. Iterations a group scheduler empties entirely are
/// counted and left out of the utilization statistics; if every iteration is
/// empty the empty-inclusion error is returned.
pub fn simulate(cfg: &SimConfig, level: SchedulerLevel) -> Result<SimReport> {
    cfg.validate()?;
    let root = RandomStream::new(cfg.seed);
    let mut placement = root.derive(&format!("placement/{}", cfg.placement.as_str()));
    let mut resample = root.derive("resample");
    let (mut occupied_total, mut wasted_total) = (0usize, 0usize);
    let (mut rows_total, mut cols_total) = (0usize, 0usize);
    let mut utilization = Vec::with_capacity(cfg.iterations);
    let mut empty = 0;
    let mut last_empty = None;
    for _ in 0..cfg.iterations {
        let (m, hard_nodes) = draw_matrix(cfg, &mut placement);
        let (occupied, wasted, rows, cols) = match apply(level, cfg, m, &hard_nodes, &mut resample) {
            Ok(r) => r,
            Err(e @ Error::EmptyInclusion { .. }) => {
                empty += 1;
                last_empty = Some(e);
                continue;
            }
            Err(e) => return Err(e),
        };
        occupied_total += occupied;
        wasted_total += wasted;
        rows_total += rows;
        cols_total += cols;
        utilization.push((occupied - wasted) as f64 / occupied as f64);
    }
    if let (true, Some(e)) = (utilization.is_empty(), last_empty) {
        return Err(e);
    }
    let iters = cfg.iterations as f64;
    let used = utilization.len() as f64;
    let mean = utilization.iter().sum::<f64>() / used;
    let var = utilization.iter().map(|u| (u - mean) * (u - mean)).sum::<f64>() / used;
    Ok(SimReport {
        scheduler: level,
        placement: cfg.placement,
        hard_fraction: cfg.hard_fraction,
        utilization_mean: mean,
        utilization_std: var.sqrt(),
        wasted_fraction: wasted_total as f64 / occupied_total as f64,
        throughput: (occupied_total - wasted_total) as f64 / iters,
        mean_rows: rows_total as f64 / iters,
        mean_columns: cols_total as f64 / iters,
        iterations: cfg.iterations,
        empty_iterations: empty,
    })
}
