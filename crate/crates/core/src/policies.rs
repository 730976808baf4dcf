//! Acceleration policies `q̈_d = f(t, q, q̇)` tracked by the controller.

use nalgebra::{DMatrix, Matrix1, Matrix2, RowVector2, Vector2};

use crate::dynamics::{check_dim, JointVec, State};
use crate::error::{Error, Result};

pub trait AccelPolicy: Send + Sync {
    fn dof(&self) -> usize;

    fn eval(&self, t: f64, state: &State) -> JointVec;

    /// Index of the sub-policy active at `t`; single-phase policies use 0.
    fn segment(&self, _t: f64) -> usize {
        0
    }
}

/// `q̈_d = K (target − q) − D q̇`.
#[derive(Debug, Clone)]
pub struct PdPointPolicy {
    pub target: JointVec,
    pub k: f64,
    pub d: f64,
}

impl PdPointPolicy {
    pub fn new(target: JointVec, k: f64, d: f64) -> Result<Self> {
        if !(k > 0.0) || !(d >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "PD gains need K > 0 and D >= 0 (got {k}, {d})"
            )));
        }
        Ok(PdPointPolicy { target, k, d })
    }
}

pub fn pd_policy_eval(policy: &PdPointPolicy, state: &State) -> Result<JointVec> {
    check_dim("state", policy.target.len(), state.dof())?;
    Ok((&policy.target - &state.q) * policy.k - &state.qd * policy.d)
}

impl AccelPolicy for PdPointPolicy {
    fn dof(&self) -> usize {
        self.target.len()
    }

    fn eval(&self, _t: f64, state: &State) -> JointVec {
        (&self.target - &state.q) * self.k - &state.qd * self.d
    }
}

/// Weights and goal of a finite-horizon regulator on per-joint double
/// integrators, `x = (q − goal, q̇)`, `u = q̈`.
#[derive(Debug, Clone)]
pub struct LqrSpec {
    pub q_pos: f64,
    pub q_vel: f64,
    pub r: f64,
    pub horizon: usize,
    pub goal: JointVec,
}

/// Time-varying affine acceleration policy `u_t = G_t [q; q̇] + o_t`.
#[derive(Debug, Clone)]
pub struct AffinePolicySegment {
    pub gains: Vec<DMatrix<f64>>,
    pub offsets: Vec<JointVec>,
    pub dt: f64,
}

impl AffinePolicySegment {
    pub fn steps(&self) -> usize {
        self.gains.len()
    }

    pub fn duration(&self) -> f64 {
        self.steps() as f64 * self.dt
    }

    pub fn dof(&self) -> usize {
        self.offsets.first().map_or(0, |o| o.len())
    }

    pub fn eval_step(&self, step: usize, state: &State) -> JointVec {
        let step = step.min(self.steps() - 1);
        let n = self.dof();
        let g = &self.gains[step];
        g.columns(0, n) * &state.q + g.columns(n, n) * &state.qd + &self.offsets[step]
    }
}

fn double_integrator(dt: f64) -> (Matrix2<f64>, Vector2<f64>) {
    (
        Matrix2::new(1.0, dt, 0.0, 1.0),
        Vector2::new(0.5 * dt * dt, dt),
    )
}

/// One Riccati step: returns the feedback gain for cost-to-go `p` and the
/// cost-to-go one step earlier.
fn riccati_step(
    p: &Matrix2<f64>,
    q: &Matrix2<f64>,
    r: f64,
    dt: f64,
) -> (RowVector2<f64>, Matrix2<f64>) {
    let (a, b) = double_integrator(dt);
    let s: Matrix1<f64> = b.transpose() * p * b;
    let k = (b.transpose() * p * a) / (r + s[0]);
    let p_prev = q + a.transpose() * p * (a - b * k);
    (k, 0.5 * (p_prev + p_prev.transpose()))
}

/// Per-joint feedback gains `(k_pos, k_vel)` for every step of the horizon,
/// first step first. The terminal cost equals the stage cost.
pub fn lqr_gains(spec: &LqrSpec, dt: f64) -> Result<Vec<RowVector2<f64>>> {
    if !(spec.r > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "LQR control weight must be positive, got {}",
            spec.r
        )));
    }
    if spec.horizon == 0 {
        return Err(Error::InvalidParameter(
            "LQR horizon must be at least one step".into(),
        ));
    }
    if !(dt > 0.0) || !(spec.q_pos >= 0.0) || !(spec.q_vel >= 0.0) {
        return Err(Error::InvalidParameter(
            "LQR needs dt > 0 and non-negative state weights".into(),
        ));
    }
    let q = Matrix2::new(spec.q_pos, 0.0, 0.0, spec.q_vel);
    let mut p = q;
    let mut gains = Vec::with_capacity(spec.horizon);
    for _ in 0..spec.horizon {
        let (k, p_prev) = riccati_step(&p, &q, spec.r, dt);
        gains.push(k);
        p = p_prev;
    }
    gains.reverse();
    Ok(gains)
}

/// Infinite-horizon gain by iterating the Riccati map to a fixed point.
pub fn lqr_steady_state_gain(q_pos: f64, q_vel: f64, r: f64, dt: f64) -> Result<RowVector2<f64>> {
    if !(r > 0.0) {
        return Err(Error::InvalidParameter(
            "LQR control weight must be positive".into(),
        ));
    }
    let q = Matrix2::new(q_pos, 0.0, 0.0, q_vel);
    let mut p = q;
    let mut k = RowVector2::zeros();
    for _ in 0..1_000_000 {
        let (k_new, p_new) = riccati_step(&p, &q, r, dt);
        let done = (p_new - p).amax() <= 1e-13 * p_new.amax().max(1.0);
        p = p_new;
        k = k_new;
        if done {
            return Ok(k);
        }
    }
    Ok(k)
}

/// Backward Riccati pass producing a time-varying segment toward `spec.goal`.
pub fn lqr_backward_pass(spec: &LqrSpec, dt: f64) -> Result<AffinePolicySegment> {
    let n = spec.goal.len();
    let per_joint = lqr_gains(spec, dt)?;
    let mut gains = Vec::with_capacity(per_joint.len());
    let mut offsets = Vec::with_capacity(per_joint.len());
    for k in per_joint {
        let mut g = DMatrix::zeros(n, 2 * n);
        for j in 0..n {
            g[(j, j)] = -k[0];
            g[(j, n + j)] = -k[1];
        }
        gains.push(g);
        offsets.push(&spec.goal * k[0]);
    }
    Ok(AffinePolicySegment { gains, offsets, dt })
}

/// Piecewise policy that runs its segments back to back over half-open
/// intervals `[start, end)`.
#[derive(Debug, Clone)]
pub struct ChainedPolicy {
    segments: Vec<AffinePolicySegment>,
    starts: Vec<f64>,
}

pub fn chain_segments(segments: Vec<AffinePolicySegment>) -> Result<ChainedPolicy> {
    let first = segments
        .first()
        .ok_or_else(|| Error::InvalidParameter("cannot chain an empty segment list".into()))?;
    let n = first.dof();
    let mut starts = Vec::with_capacity(segments.len());
    let mut t = 0.0;
    for s in &segments {
        if s.steps() == 0 {
            return Err(Error::InvalidParameter(
                "policy segment has no steps".into(),
            ));
        }
        check_dim("segment", n, s.dof())?;
        starts.push(t);
        t += s.duration();
    }
    Ok(ChainedPolicy { segments, starts })
}

impl ChainedPolicy {
    pub fn segments(&self) -> &[AffinePolicySegment] {
        &self.segments
    }

    pub fn total_duration(&self) -> f64 {
        let last = self.segments.len() - 1;
        self.starts[last] + self.segments[last].duration()
    }

    /// Segment start times in seconds.
    pub fn starts(&self) -> &[f64] {
        &self.starts
    }

    /// Active `(segment, step)` at time `t`; past the end it clamps to the
    /// final step of the last segment.
    pub fn locate(&self, t: f64) -> (usize, usize) {
        let last = self.segments.len() - 1;
        if t >= self.total_duration() {
            return (last, self.segments[last].steps() - 1);
        }
        let idx = self
            .starts
            .partition_point(|&s| s <= t + 1e-9)
            .saturating_sub(1);
        let seg = &self.segments[idx];
        let step = ((t - self.starts[idx]) / seg.dt + 1e-9).floor().max(0.0) as usize;
        (idx, step.min(seg.steps() - 1))
    }

    /// Index of the segment active at `t`.
    pub fn segment_index(&self, t: f64) -> usize {
        self.locate(t).0
    }
}

impl AccelPolicy for ChainedPolicy {
    fn dof(&self) -> usize {
        self.segments[0].dof()
    }

    fn eval(&self, t: f64, state: &State) -> JointVec {
        let (seg, step) = self.locate(t);
        self.segments[seg].eval_step(step, state)
    }

    fn segment(&self, t: f64) -> usize {
        self.segment_index(t)
    }
}

/// Chained regulators, one per goal, each `segment_duration` seconds long.
pub fn lqr_chain(
    goals: &[JointVec],
    q_pos: f64,
    q_vel: f64,
    r: f64,
    segment_duration: f64,
    dt: f64,
) -> Result<ChainedPolicy> {
    let ratio = segment_duration / dt;
    if (ratio - ratio.round()).abs() > 1e-9 * ratio.max(1.0) {
        return Err(Error::InvalidParameter(format!(
            "segment duration {segment_duration} is not a whole number of {dt} s steps"
        )));
    }
    let horizon = ratio.round() as usize;
    let segments = goals
        .iter()
        .map(|goal| {
            lqr_backward_pass(
                &LqrSpec {
                    q_pos,
                    q_vel,
                    r,
                    horizon,
                    goal: goal.clone(),
                },
                dt,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    chain_segments(segments)
}
