use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::STDataset;
use crate::numerics::Tensor;
use crate::{Error, Result, Scalar};

/// Reads a dataset CSV: header `timestamp,<node ids...>`, then one row per step.
///
/// `min_rows` is the least number of data rows accepted (typically `T_in + T_out`).
pub fn load_csv<S: Scalar>(path: &Path, min_rows: usize) -> Result<STDataset<S>> {
    let text = fs::read_to_string(path)?;
    read_csv(&text, min_rows)
}

pub fn read_csv<S: Scalar>(text: &str, min_rows: usize) -> Result<STDataset<S>> {
    let mut lines = text.split('\n').map(|l| l.strip_suffix('\r').unwrap_or(l));
    let header = lines.next().filter(|h| !h.is_empty()).ok_or(Error::Parse {
        line: 1,
        message: "missing header row".into(),
    })?;
    let mut cols = header.split(',');
    if cols.next() != Some("timestamp") {
        return Err(Error::Parse {
            line: 1,
            message: "first header column must be `timestamp`".into(),
        });
    }
    let node_ids: Vec<String> = cols.map(str::to_owned).collect();
    if node_ids.is_empty() {
        return Err(Error::Parse {
            line: 1,
            message: "header names no nodes".into(),
        });
    }
    let n = node_ids.len();
    let mut timestamps = Vec::new();
    let mut values = Vec::new();
    let mut last_line = 1;
    for (idx, line) in lines.enumerate() {
        let line_no = idx + 2;
        if line.is_empty() {
            continue;
        }
        last_line = line_no;
        let mut cells = line.split(',');
        let ts = cells.next().unwrap_or_default();
        let row: Vec<&str> = cells.collect();
        if row.len() != n {
            return Err(Error::Parse {
                line: line_no,
                message: format!("expected {n} readings, found {}", row.len()),
            });
        }
        for (col, cell) in row.iter().enumerate() {
            let v: S = cell.trim().parse().map_err(|_| Error::Parse {
                line: line_no,
                message: format!("column `{}`: `{cell}` is not a number", node_ids[col]),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("column `{}`: non-finite reading", node_ids[col]),
                });
            }
            values.push(v);
        }
        timestamps.push(ts.to_owned());
    }
    if timestamps.len() < min_rows.max(1) {
        return Err(Error::Parse {
            line: last_line,
            message: format!("need at least {} data rows, found {}", min_rows.max(1), timestamps.len()),
        });
    }
    let steps = timestamps.len();
    STDataset::new(Tensor::from_vec(&[steps, n], values)?, node_ids, timestamps, 5)
}

/// Serializes with shortest round-trip float formatting and LF line endings.
pub fn write_csv_string<S: Scalar>(dataset: &STDataset<S>) -> String {
    let mut out = String::from("timestamp");
    for id in dataset.node_ids() {
        out.push(',');
        out.push_str(id);
    }
    out.push('\n');
    for (t, ts) in dataset.timestamps().iter().enumerate() {
        out.push_str(ts);
        for n in 0..dataset.num_nodes() {
            let _ = write!(out, ",{}", dataset.value(t, n));
        }
        out.push('\n');
    }
    out
}

pub fn write_csv<S: Scalar>(dataset: &STDataset<S>, path: &Path) -> Result<()> {
    fs::write(path, write_csv_string(dataset))?;
    Ok(())
}
