//! File-producing entry points behind the `doomed` command-line tool.

use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::harness::config::{ExperimentConfig, LossKind};
use crate::harness::episode::{plan_rng, run_with, EpisodeTrace};
use crate::harness::metrics::{compute_metrics, segment_metrics, MetricsRow};
use crate::harness::output::{emit_metrics_csv, emit_trace_csv, trace_file_name};
use crate::harness::stiction::{compare_direct_indirect, StictionReport};
use crate::harness::sweep::{run_sweep, segment_count, SweepGrid};
use crate::harness::verify::{run_verification, VerifyReport};

pub const METRICS_FILE: &str = "metrics.csv";
pub const VERIFY_FILE: &str = "verify_report.txt";

pub fn load_config(path: &Path, seed: Option<u64>) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::load(path)?;
    if let Some(s) = seed {
        cfg.sim.seed = s;
    }
    Ok(cfg)
}

fn ensure_dir(out: &Path) -> Result<()> {
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))
}

#[derive(Debug)]
pub struct SimulateOutput {
    pub traces: Vec<(PathBuf, EpisodeTrace)>,
    pub metrics: Vec<MetricsRow>,
    pub metrics_path: PathBuf,
}

/// Runs every trial of `config`, writing one trace per trial and a metrics
/// file with whole-run and per-segment rows.
pub fn simulate(config: &ExperimentConfig, out: &Path) -> Result<SimulateOutput> {
    ensure_dir(out)?;
    let exp = config.build(&mut plan_rng(config.sim.seed))?;
    let segments = segment_count(config);
    let mut traces = Vec::new();
    let mut metrics = Vec::new();
    for trial in 0..config.trials {
        let trace = run_with(config, &exp, trial)?;
        let path = out.join(trace_file_name(config, trial));
        emit_trace_csv(&trace, &path)?;
        if !trace.is_empty() {
            metrics.push(compute_metrics(&trace)?);
            if segments > 1 {
                metrics.extend(segment_metrics(&trace, segments));
            }
        }
        traces.push((path, trace));
    }
    let metrics_path = out.join(METRICS_FILE);
    emit_metrics_csv(&metrics, &metrics_path)?;
    Ok(SimulateOutput {
        traces,
        metrics,
        metrics_path,
    })
}

pub fn sweep(
    config: &ExperimentConfig,
    grid: &SweepGrid,
    out: &Path,
) -> Result<(Vec<MetricsRow>, PathBuf)> {
    ensure_dir(out)?;
    let rows = run_sweep(config, grid)?;
    let path = out.join(METRICS_FILE);
    emit_metrics_csv(&rows, &path)?;
    Ok((rows, path))
}

pub fn verify(seed: u64, out: &Path) -> Result<(VerifyReport, PathBuf)> {
    ensure_dir(out)?;
    let report = run_verification(seed)?;
    let path = out.join(VERIFY_FILE);
    std::fs::write(&path, format!("{report}\n")).map_err(|e| Error::io(&path, e))?;
    Ok((report, path))
}

/// Runs both learners and writes one trace per learner.
pub fn compare(config: &ExperimentConfig, out: &Path) -> Result<(StictionReport, Vec<PathBuf>)> {
    ensure_dir(out)?;
    let report = compare_direct_indirect(config)?;
    let mut paths = Vec::new();
    for run in [&report.direct, &report.indirect] {
        let mut cfg = config.clone();
        cfg.loss = run.loss;
        let path = out.join(trace_file_name(&cfg, 0));
        emit_trace_csv(&run.trace, &path)?;
        paths.push(path);
    }
    Ok((report, paths))
}

pub fn describe_compare(report: &StictionReport) -> String {
    let mut s = String::new();
    for run in [&report.direct, &report.indirect] {
        let name = match run.loss {
            LossKind::Direct => "direct",
            LossKind::Indirect => "indirect",
        };
        let breakaway = run.breakaway_time.map_or_else(
            || "never".to_string(),
            |t| format!("{t:.3} s (tick {})", run.breakaway_tick.unwrap_or(0)),
        );
        let frozen = run
            .w_frozen_from
            .map_or_else(|| "no".to_string(), |k| format!("from tick {k}"));
        s.push_str(&format!(
            "{name:<8} breakaway {breakaway}, final |q - target| {:.4}, max |q - q0| {:.3e}, final w {:.4}, w frozen {frozen}\n",
            run.final_position_error,
            run.position_change,
            run.w.last().copied().unwrap_or(0.0),
        ));
    }
    s
}
