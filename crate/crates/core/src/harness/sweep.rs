use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::harness::config::{parse_entries, parse_list, parse_num, ExperimentConfig, PolicySpec};
use crate::harness::episode::{plan_rng, run_with};
use crate::harness::metrics::{average_metrics, segment_metrics, GridPoint, MetricsRow};

/// Learning-rate, variance-scaling and momentum values to cross.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepGrid {
    pub eta: Vec<f64>,
    pub alpha: Vec<f64>,
    pub gamma: Vec<f64>,
    /// Overrides the config's trial count when set.
    pub trials: Option<usize>,
}

impl Default for SweepGrid {
    /// η ∈ {0.01, …, 0.1}, α ∈ {0, 0.1, …, 0.5}, γ ∈ {0.9, 0.95}.
    fn default() -> Self {
        SweepGrid {
            eta: (1..=10).map(|i| i as f64 / 100.0).collect(),
            alpha: (0..=5).map(|i| i as f64 / 10.0).collect(),
            gamma: vec![0.9, 0.95],
            trials: None,
        }
    }
}

impl SweepGrid {
    pub fn points(&self) -> Vec<GridPoint> {
        let mut out = Vec::with_capacity(self.len());
        for &eta in &self.eta {
            for &alpha in &self.alpha {
                for &gamma in &self.gamma {
                    out.push(GridPoint { eta, alpha, gamma });
                }
            }
        }
        out
    }

    pub fn len(&self) -> usize {
        self.eta.len() * self.alpha.len() * self.gamma.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Same `key = v1, v2, …` format as experiment configs; keys `eta`,
    /// `alpha`, `gamma`, `trials`. Missing keys keep the default lists.
    pub fn parse(text: &str) -> Result<Self> {
        let mut grid = SweepGrid::default();
        for e in parse_entries(text)? {
            match e.key.as_str() {
                "eta" => grid.eta = parse_list(&e)?,
                "alpha" => grid.alpha = parse_list(&e)?,
                "gamma" => grid.gamma = parse_list(&e)?,
                "trials" => grid.trials = Some(parse_num(&e)?),
                other => return Err(Error::config(e.line, format!("unknown grid key `{other}`"))),
            }
        }
        Ok(grid)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }
}

/// Number of policy segments metrics are split into.
pub fn segment_count(config: &ExperimentConfig) -> usize {
    match &config.policy {
        PolicySpec::LqrChain { segments, .. } => *segments,
        PolicySpec::Pd { .. } => 1,
    }
}

/// Runs every grid point for the configured number of trials, in parallel.
/// Rows come out grouped by segment, grid points in `eta`, `alpha`, `gamma`
/// order within each segment.
pub fn run_sweep(base: &ExperimentConfig, grid: &SweepGrid) -> Result<Vec<MetricsRow>> {
    if grid.is_empty() {
        return Err(Error::InvalidParameter(
            "sweep grid has an empty axis".into(),
        ));
    }
    let trials = grid.trials.unwrap_or(base.trials);
    if trials == 0 {
        return Err(Error::InvalidParameter(
            "sweep needs at least one trial".into(),
        ));
    }
    let exp = base.build(&mut plan_rng(base.sim.seed))?;
    let segments = segment_count(base);

    let per_point: Vec<Vec<MetricsRow>> = grid
        .points()
        .into_par_iter()
        .map(|p| -> Result<Vec<MetricsRow>> {
            let mut cfg = base.clone();
            cfg.learner.eta_lr = p.eta;
            cfg.learner.alpha_var = p.alpha;
            cfg.learner.gamma_mom = p.gamma;
            let runs = (0..trials)
                .map(|trial| run_with(&cfg, &exp, trial).map(|t| segment_metrics(&t, segments)))
                .collect::<Result<Vec<_>>>()?;
            (0..segments)
                .map(|s| {
                    let per_trial: Vec<MetricsRow> = runs.iter().map(|r| r[s].clone()).collect();
                    let mut row = average_metrics(&per_trial)?;
                    row.point = Some(p);
                    Ok(row)
                })
                .collect()
        })
        .collect::<Result<_>>()?;

    Ok((0..segments)
        .flat_map(|s| per_point.iter().map(move |rows| rows[s].clone()))
        .collect())
}
