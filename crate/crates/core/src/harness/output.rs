//! CSV files for traces and sweep metrics.
//!
//! Floats use Rust's shortest round-trip formatting, so reading a file back
//! reproduces the values bit for bit.

use std::path::Path;

use nalgebra::DVector;
use sha2::{Digest, Sha256};

use crate::dynamics::JointVec;
use crate::error::{Error, Result};
use crate::harness::config::ExperimentConfig;
use crate::harness::episode::{EpisodeTrace, TraceRow};
use crate::harness::metrics::{GridPoint, MetricsRow, METRIC_NAMES};

const JOINT_COLUMNS: [&str; 9] = [
    "q",
    "qd",
    "qdd_d",
    "qdd_a_est",
    "tau_id",
    "f_offset",
    "tau_applied",
    "accel_error",
    "smoothed_accel_error",
];

const METRICS_HEADER: [&str; 8] = [
    "eta", "alpha", "gamma", "segment", "joint", "metric", "value", "success",
];

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> Error + '_ {
    move |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    }
}

fn writer(path: &Path) -> Result<csv::Writer<std::fs::File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    csv::Writer::from_path(path).map_err(csv_err(path))
}

/// Deterministic file stem for a run: `trace_<first 12 hex of sha256>`.
pub fn trace_file_name(config: &ExperimentConfig, trial: usize) -> String {
    let mut h = Sha256::new();
    h.update(config.to_config_string().as_bytes());
    h.update(trial.to_le_bytes());
    let digest = h.finalize();
    let hex: String = digest.iter().take(6).map(|b| format!("{b:02x}")).collect();
    format!("trace_{hex}.csv")
}

pub fn trace_header(dof: usize, param_dim: usize) -> Vec<String> {
    let mut h = vec![
        "t".to_string(),
        "segment".to_string(),
        "learning".to_string(),
    ];
    for name in JOINT_COLUMNS {
        h.extend((0..dof).map(|j| format!("{name}_{j}")));
    }
    h.extend((0..param_dim).map(|i| format!("w_{i}")));
    h
}

/// Writes one row per tick. An empty trace yields a header-only file.
pub fn emit_trace_csv(trace: &EpisodeTrace, path: &Path) -> Result<()> {
    let param_dim = trace.rows.first().map_or(trace.dof, |r| r.w.len());
    let mut w = writer(path)?;
    let err = csv_err(path);
    w.write_record(trace_header(trace.dof, param_dim))
        .map_err(&err)?;
    for r in &trace.rows {
        let mut rec = vec![
            r.t.to_string(),
            r.segment.to_string(),
            r.learning.to_string(),
        ];
        for col in [
            &r.q,
            &r.qd,
            &r.qdd_d,
            &r.qdd_a_est,
            &r.tau_id,
            &r.f_offset,
            &r.tau_applied,
            &r.accel_error,
            &r.smoothed_accel_error,
        ] {
            rec.extend(col.iter().map(f64::to_string));
        }
        rec.extend(r.w.iter().map(f64::to_string));
        w.write_record(&rec).map_err(&err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn parse_field<T: std::str::FromStr>(path: &Path, line: usize, s: &str) -> Result<T> {
    s.parse().map_err(|_| Error::Csv {
        path: path.to_path_buf(),
        source: csv::Error::from(std::io::Error::new(
            std::io::ErrorKind::InvalidData,
            format!("line {line}: cannot parse `{s}`"),
        )),
    })
}

/// Reads a trace written by [`emit_trace_csv`].
pub fn read_trace_csv(path: &Path) -> Result<Vec<TraceRow>> {
    let mut rdr = csv::Reader::from_path(path).map_err(csv_err(path))?;
    let header = rdr.headers().map_err(csv_err(path))?.clone();
    let dof = header.iter().filter(|h| h.starts_with("q_")).count();
    let param_dim = header.iter().filter(|h| h.starts_with("w_")).count();
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(csv_err(path))?;
        let line = i + 2;
        let f = |k: usize| parse_field::<f64>(path, line, &rec[k]);
        let joint = |block: usize| -> Result<JointVec> {
            let base = 3 + block * dof;
            Ok(JointVec::from_vec(
                (0..dof).map(|j| f(base + j)).collect::<Result<_>>()?,
            ))
        };
        let w_base = 3 + JOINT_COLUMNS.len() * dof;
        rows.push(TraceRow {
            t: f(0)?,
            segment: parse_field(path, line, &rec[1])?,
            learning: parse_field(path, line, &rec[2])?,
            q: joint(0)?,
            qd: joint(1)?,
            qdd_d: joint(2)?,
            qdd_a_est: joint(3)?,
            tau_id: joint(4)?,
            f_offset: joint(5)?,
            tau_applied: joint(6)?,
            accel_error: joint(7)?,
            smoothed_accel_error: joint(8)?,
            w: DVector::from_vec(
                (0..param_dim)
                    .map(|i| f(w_base + i))
                    .collect::<Result<_>>()?,
            ),
        });
    }
    Ok(rows)
}

/// Long format: one line per (grid point, segment, joint, metric).
pub fn emit_metrics_csv(rows: &[MetricsRow], path: &Path) -> Result<()> {
    let mut w = writer(path)?;
    let err = csv_err(path);
    w.write_record(METRICS_HEADER).map_err(&err)?;
    for r in rows {
        let p = r.point.unwrap_or(GridPoint {
            eta: f64::NAN,
            alpha: f64::NAN,
            gamma: f64::NAN,
        });
        let seg = r
            .segment
            .map_or_else(|| "all".to_string(), |s| s.to_string());
        for j in 0..r.dof() {
            for name in METRIC_NAMES {
                let v = r.metric(name).expect("known metric")[j];
                w.write_record([
                    p.eta.to_string(),
                    p.alpha.to_string(),
                    p.gamma.to_string(),
                    seg.clone(),
                    j.to_string(),
                    name.to_string(),
                    v.to_string(),
                    r.success.to_string(),
                ])
                .map_err(&err)?;
            }
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Reads a long-format metrics file back into rows, in first-seen order.
pub fn read_metrics_csv(path: &Path) -> Result<Vec<MetricsRow>> {
    let mut rdr = csv::Reader::from_path(path).map_err(csv_err(path))?;
    let mut rows: Vec<MetricsRow> = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(csv_err(path))?;
        let line = i + 2;
        let eta: f64 = parse_field(path, line, &rec[0])?;
        let alpha: f64 = parse_field(path, line, &rec[1])?;
        let gamma: f64 = parse_field(path, line, &rec[2])?;
        let point = (!eta.is_nan()).then_some(GridPoint { eta, alpha, gamma });
        let segment = match &rec[3] {
            "all" => None,
            s => Some(parse_field(path, line, s)?),
        };
        let joint: usize = parse_field(path, line, &rec[4])?;
        let value: f64 = parse_field(path, line, &rec[6])?;
        let success: bool = parse_field(path, line, &rec[7])?;

        let same =
            |r: &MetricsRow| r.segment == segment && point_bits(r.point) == point_bits(point);
        let idx = match rows.iter().position(same) {
            Some(i) => i,
            None => {
                rows.push(MetricsRow {
                    point,
                    segment,
                    mean_abs_accel_error: Vec::new(),
                    mean_accel_error: Vec::new(),
                    mean_abs_offset: Vec::new(),
                    success,
                });
                rows.len() - 1
            }
        };
        let col = rows[idx].metric_mut(&rec[5]).ok_or_else(|| Error::Csv {
            path: path.to_path_buf(),
            source: csv::Error::from(std::io::Error::new(
                std::io::ErrorKind::InvalidData,
                format!("line {line}: unknown metric `{}`", &rec[5]),
            )),
        })?;
        if col.len() <= joint {
            col.resize(joint + 1, f64::NAN);
        }
        col[joint] = value;
    }
    Ok(rows)
}

fn point_bits(p: Option<GridPoint>) -> Option<[u64; 3]> {
    p.map(|p| [p.eta.to_bits(), p.alpha.to_bits(), p.gamma.to_bits()])
}
