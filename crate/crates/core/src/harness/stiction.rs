use crate::error::{Error, Result};
use crate::harness::config::{broadcast, ExperimentConfig, LossKind, PlantSpec, PolicySpec};
use crate::harness::episode::{run_episode, EpisodeTrace};
use crate::learner::UpdateRule;

/// Outcome of one learner on the stiction joint.
#[derive(Debug, Clone)]
pub struct StictionRun {
    pub loss: LossKind,
    pub trace: EpisodeTrace,
    /// First tick whose measured acceleration is non-zero.
    pub breakaway_tick: Option<usize>,
    pub breakaway_time: Option<f64>,
    pub final_position_error: f64,
    /// Largest `|q − q₀|` seen over the run.
    pub position_change: f64,
    /// Offset parameter at the start of each tick, then the final value.
    pub w: Vec<f64>,
    /// Tick from which every later update leaves `w` bit-identical.
    pub w_frozen_from: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct StictionReport {
    pub direct: StictionRun,
    pub indirect: StictionRun,
}

/// Runs the direct and the indirect learner from the same rest state toward
/// the same target on a one-joint stiction plant.
pub fn compare_direct_indirect(config: &ExperimentConfig) -> Result<StictionReport> {
    if !matches!(config.plant, PlantSpec::Stiction { .. }) {
        return Err(Error::InvalidParameter(
            "compare needs a stiction plant".into(),
        ));
    }
    let PolicySpec::Pd { target, .. } = &config.policy else {
        return Err(Error::InvalidParameter(
            "compare needs a pd policy with a position target".into(),
        ));
    };
    let target = broadcast("policy.target", target, 1)?[0];

    let run = |loss: LossKind| -> Result<StictionRun> {
        let mut cfg = config.clone();
        cfg.loss = loss;
        cfg.learning_enabled = true;
        if loss == LossKind::Indirect {
            cfg.learner.rule = UpdateRule::Gradient;
        }
        let trace = run_episode(&cfg)?;
        Ok(summarize(loss, trace, target))
    };
    Ok(StictionReport {
        direct: run(LossKind::Direct)?,
        indirect: run(LossKind::Indirect)?,
    })
}

fn summarize(loss: LossKind, trace: EpisodeTrace, target: f64) -> StictionRun {
    let breakaway_tick = trace.rows.iter().position(|r| r.qdd_a_est[0] != 0.0);
    let q0 = trace
        .rows
        .first()
        .map_or(trace.final_state.q[0], |r| r.q[0]);
    let position_change = trace
        .rows
        .iter()
        .map(|r| r.q[0])
        .chain(std::iter::once(trace.final_state.q[0]))
        .map(|q| (q - q0).abs())
        .fold(0.0, f64::max);
    let mut w: Vec<f64> = trace.rows.iter().map(|r| r.w[0]).collect();
    w.push(trace.final_w[0]);
    let w_frozen_from = w
        .windows(2)
        .rposition(|p| p[1] != p[0])
        .map_or(Some(0), |i| (i + 1 < w.len() - 1).then_some(i + 1));
    StictionRun {
        loss,
        breakaway_time: breakaway_tick.map(|k| k as f64 * trace.dt_control),
        breakaway_tick,
        final_position_error: (trace.final_state.q[0] - target).abs(),
        position_change,
        w,
        w_frozen_from,
        trace,
    }
}
