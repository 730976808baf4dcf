use crate::error::{Error, Result};
use crate::harness::episode::{EpisodeTrace, TraceRow};

/// Sweep coordinates of a metrics row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridPoint {
    pub eta: f64,
    pub alpha: f64,
    pub gamma: f64,
}

/// Per-joint averages over a trace (or a segment of it).
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRow {
    pub point: Option<GridPoint>,
    /// `None` for whole-trace metrics.
    pub segment: Option<usize>,
    /// `Σ|q̈_d − q̈_a| / T`
    pub mean_abs_accel_error: Vec<f64>,
    /// `Σ(q̈_d − q̈_a) / T`, the signed bias.
    pub mean_accel_error: Vec<f64>,
    /// `Σ|f_offset| / T`
    pub mean_abs_offset: Vec<f64>,
    pub success: bool,
}

pub const METRIC_NAMES: [&str; 3] = [
    "mean_abs_accel_error",
    "mean_accel_error",
    "mean_abs_offset",
];

impl MetricsRow {
    pub fn dof(&self) -> usize {
        self.mean_abs_accel_error.len()
    }

    pub fn metric(&self, name: &str) -> Option<&[f64]> {
        match name {
            "mean_abs_accel_error" => Some(&self.mean_abs_accel_error),
            "mean_accel_error" => Some(&self.mean_accel_error),
            "mean_abs_offset" => Some(&self.mean_abs_offset),
            _ => None,
        }
    }

    pub(crate) fn metric_mut(&mut self, name: &str) -> Option<&mut Vec<f64>> {
        match name {
            "mean_abs_accel_error" => Some(&mut self.mean_abs_accel_error),
            "mean_accel_error" => Some(&mut self.mean_accel_error),
            "mean_abs_offset" => Some(&mut self.mean_abs_offset),
            _ => None,
        }
    }
}

fn from_rows<'a>(
    dof: usize,
    rows: impl Iterator<Item = &'a TraceRow>,
    success: bool,
) -> Result<MetricsRow> {
    let mut abs_err = vec![0.0; dof];
    let mut err = vec![0.0; dof];
    let mut off = vec![0.0; dof];
    let mut count = 0usize;
    for r in rows {
        for j in 0..dof {
            abs_err[j] += r.accel_error[j].abs();
            err[j] += r.accel_error[j];
            off[j] += r.f_offset[j].abs();
        }
        count += 1;
    }
    if count == 0 {
        return Err(Error::EmptyTrace);
    }
    let t = count as f64;
    let avg = |v: Vec<f64>| v.into_iter().map(|x| x / t).collect();
    Ok(MetricsRow {
        point: None,
        segment: None,
        mean_abs_accel_error: avg(abs_err),
        mean_accel_error: avg(err),
        mean_abs_offset: avg(off),
        success,
    })
}

pub fn compute_metrics(trace: &EpisodeTrace) -> Result<MetricsRow> {
    from_rows(trace.dof, trace.rows.iter(), trace.success)
}

/// Metrics for each of `segments` policy segments. A segment the run never
/// reached gets NaN averages.
pub fn segment_metrics(trace: &EpisodeTrace, segments: usize) -> Vec<MetricsRow> {
    (0..segments)
        .map(|s| {
            let mut row = from_rows(
                trace.dof,
                trace.rows.iter().filter(|r| r.segment == s),
                trace.success,
            )
            .unwrap_or_else(|_| nan_row(trace.dof, trace.success));
            row.segment = Some(s);
            row
        })
        .collect()
}

fn nan_row(dof: usize, success: bool) -> MetricsRow {
    MetricsRow {
        point: None,
        segment: None,
        mean_abs_accel_error: vec![f64::NAN; dof],
        mean_accel_error: vec![f64::NAN; dof],
        mean_abs_offset: vec![f64::NAN; dof],
        success,
    }
}

/// Trial average: per-joint means over the trials that have data, success
/// only if every trial succeeded.
pub fn average_metrics(rows: &[MetricsRow]) -> Result<MetricsRow> {
    let first = rows.first().ok_or(Error::EmptyTrace)?;
    let mut out = nan_row(first.dof(), rows.iter().all(|r| r.success));
    out.point = first.point;
    out.segment = first.segment;
    for name in METRIC_NAMES {
        let target = out.metric_mut(name).expect("known metric");
        for (j, slot) in target.iter_mut().enumerate() {
            let vals: Vec<f64> = rows
                .iter()
                .map(|r| r.metric(name).expect("known metric")[j])
                .filter(|x| !x.is_nan())
                .collect();
            if !vals.is_empty() {
                *slot = vals.iter().sum::<f64>() / vals.len() as f64;
            }
        }
    }
    Ok(out)
}

/// Mean of `|smoothed accel error|` per joint over ticks in `[from, to)`.
pub fn windowed_smoothed_error(trace: &EpisodeTrace, from: f64, to: f64) -> Vec<f64> {
    let mut sum = vec![0.0; trace.dof];
    let mut count = 0usize;
    for r in trace.window(from, to) {
        for (s, e) in sum.iter_mut().zip(r.smoothed_accel_error.iter()) {
            *s += e.abs();
        }
        count += 1;
    }
    sum.into_iter().map(|s| s / count as f64).collect()
}

/// Root-mean-square of `‖q_a − q_b‖` over the ticks both traces reached.
pub fn rms_position_deviation(a: &EpisodeTrace, b: &EpisodeTrace) -> f64 {
    let n = a.len().min(b.len());
    if n == 0 {
        return 0.0;
    }
    let sum: f64 = a.rows[..n]
        .iter()
        .zip(&b.rows[..n])
        .map(|(x, y)| (&x.q - &y.q).norm_squared())
        .sum();
    (sum / n as f64).sqrt()
}
