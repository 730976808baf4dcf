use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dynamics::{integrate_step, inverse_dynamics, JointVec, State};
use crate::error::Result;
use crate::harness::config::{
    broadcast, Experiment, ExperimentConfig, InitialVelocity, LossKind, VelocitySource,
};
use crate::learner::{indirect_step, learner_tick, AccelEstimator, LearnerState};

/// One control tick. `q`, `qd` are the true state at the start of the tick;
/// `qdd_a_est` is the finite-difference estimate formed at its end.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub t: f64,
    pub segment: usize,
    pub q: JointVec,
    pub qd: JointVec,
    pub qdd_d: JointVec,
    pub qdd_a_est: JointVec,
    pub tau_id: JointVec,
    pub f_offset: JointVec,
    pub tau_applied: JointVec,
    pub w: DVector<f64>,
    pub accel_error: JointVec,
    pub smoothed_accel_error: JointVec,
    pub learning: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeTrace {
    pub dof: usize,
    pub dt_control: f64,
    pub rows: Vec<TraceRow>,
    pub success: bool,
    /// Why the run stopped early, if it did.
    pub failure: Option<String>,
    /// True state after the last simulated tick.
    pub final_state: State,
    /// Learner parameters after the last update.
    pub final_w: DVector<f64>,
}

impl EpisodeTrace {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Rows whose tick start lies in `[from, to)`.
    pub fn window(&self, from: f64, to: f64) -> impl Iterator<Item = &TraceRow> {
        self.rows
            .iter()
            .filter(move |r| r.t >= from - 1e-9 && r.t < to - 1e-9)
    }
}

/// `value + amplitude·u` with `u` uniform on `[−1, 1]` per element.
pub fn inject_noise(rng: &mut ChaCha8Rng, amplitude: f64, value: &JointVec) -> JointVec {
    if amplitude == 0.0 {
        return value.clone();
    }
    value.map(|x| x + amplitude * rng.gen_range(-1.0..=1.0))
}

/// Generator for the shared plan (regulator waypoints).
pub fn plan_rng(seed: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(0);
    rng
}

/// Generator for a trial's initial velocity and sensor noise.
pub fn trial_rng(seed: u64, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64 + 1);
    rng
}

pub fn run_episode(config: &ExperimentConfig) -> Result<EpisodeTrace> {
    run_trial(config, 0)
}

pub fn run_trial(config: &ExperimentConfig, trial: usize) -> Result<EpisodeTrace> {
    let exp = config.build(&mut plan_rng(config.sim.seed))?;
    run_with(config, &exp, trial)
}

struct Sensor {
    source: VelocitySource,
    amp: f64,
    dt: f64,
    prev_q: Option<JointVec>,
}

impl Sensor {
    fn read(&mut self, rng: &mut ChaCha8Rng, truth: &State) -> State {
        let q = inject_noise(rng, self.amp, &truth.q);
        let qd = match (self.source, &self.prev_q) {
            (VelocitySource::Differenced, Some(prev)) => (&q - prev) / self.dt,
            _ => truth.qd.clone(),
        };
        self.prev_q = Some(q.clone());
        State { q, qd, t: truth.t }
    }
}

/// Runs one closed-loop episode on prebuilt objects.
pub fn run_with(config: &ExperimentConfig, exp: &Experiment, trial: usize) -> Result<EpisodeTrace> {
    config.validate()?;
    let n = config.dof();
    let sim = &config.sim;
    let mut rng = trial_rng(sim.seed, trial);

    let qd0 = match &config.initial_qd {
        InitialVelocity::Fixed(v) => broadcast("init.qd", v, n)?,
        InitialVelocity::Random { range } => {
            JointVec::from_fn(n, |_, _| rng.gen_range(-range..=*range))
        }
    };
    let mut truth = State::new(broadcast("init.q", &config.initial_q, n)?, qd0, 0.0)?;

    let mut sensor = Sensor {
        source: config.noise.velocity,
        amp: config.noise.position_noise_amp,
        dt: sim.dt_control,
        prev_q: None,
    };
    let mut meas = sensor.read(&mut rng, &truth);
    let mut estimator =
        AccelEstimator::primed(sim.dt_control, config.estimator_smoothing, meas.qd.clone())?;
    let mut lstate = LearnerState::for_model(&exp.offset);
    let mut offset = exp.offset.offset(&meas.q, &lstate.w)?;
    let mut smoothed: Option<JointVec> = None;

    let ticks = sim.control_ticks();
    let substeps = sim.substeps();
    let mut trace = EpisodeTrace {
        dof: n,
        dt_control: sim.dt_control,
        rows: Vec::with_capacity(ticks),
        success: true,
        failure: None,
        final_state: truth.clone(),
        final_w: lstate.w.clone(),
    };

    for k in 0..ticks {
        let t = k as f64 * sim.dt_control;
        let qdd_d = exp.policy.eval(t, &meas);
        let tau_id = inverse_dynamics(exp.model.as_ref(), &meas, &qdd_d)?;
        let tau_cmd = &tau_id + &offset;
        let tau_applied = inject_noise(&mut rng, config.noise.offset_noise_amp, &tau_cmd);

        if let Some(reason) = unsafe_reason(config, &tau_applied, &truth.qd) {
            trace.success = false;
            trace.failure = Some(format!("t = {t:.3} s: {reason}"));
            break;
        }

        let start = truth.clone();
        let mut stepped = Ok(());
        for _ in 0..substeps {
            match exp
                .plant
                .forward_dynamics(&truth, &tau_applied)
                .and_then(|a| integrate_step(&truth, &a, sim.dt_sim))
            {
                Ok(next) => truth = next,
                Err(e) => {
                    stepped = Err(e);
                    break;
                }
            }
        }
        if let Err(e) = stepped {
            trace.success = false;
            trace.failure = Some(format!("t = {t:.3} s: {e}"));
            break;
        }
        // Keep the clock on the control grid rather than accumulating dt_sim.
        truth.t = (k + 1) as f64 * sim.dt_control;

        let next_meas = sensor.read(&mut rng, &truth);
        let qdd_a = estimator.update(&next_meas.qd).value;
        let err = &qdd_d - &qdd_a;
        let s = match smoothed.take() {
            Some(prev) => prev * config.report_smoothing + &err * (1.0 - config.report_smoothing),
            None => err.clone(),
        };
        smoothed = Some(s.clone());

        let learning = config.learning_enabled && t >= config.learning_on_at - 1e-9;
        let row_offset = offset.clone();
        let row_w = lstate.w.clone();
        if learning {
            match config.loss {
                LossKind::Direct => {
                    let (next, f) = learner_tick(
                        &config.learner,
                        &lstate,
                        &exp.offset,
                        &meas.q,
                        &qdd_d,
                        &qdd_a,
                    )?;
                    lstate = next;
                    offset = f;
                }
                LossKind::Indirect => {
                    lstate = indirect_step(
                        &config.learner,
                        &lstate,
                        exp.model.as_ref(),
                        &meas,
                        &qdd_a,
                        &tau_cmd,
                    )?;
                    offset = exp.offset.offset(&meas.q, &lstate.w)?;
                }
            }
        }

        trace.rows.push(TraceRow {
            t,
            segment: exp.policy.segment(t),
            q: start.q,
            qd: start.qd,
            qdd_d,
            qdd_a_est: qdd_a,
            tau_id,
            f_offset: row_offset,
            tau_applied,
            w: row_w,
            accel_error: err,
            smoothed_accel_error: s,
            learning,
        });
        meas = next_meas;
    }
    trace.final_state = truth;
    trace.final_w = lstate.w;
    Ok(trace)
}

fn unsafe_reason(config: &ExperimentConfig, tau: &JointVec, qd: &JointVec) -> Option<String> {
    if tau.iter().chain(qd.iter()).any(|x| !x.is_finite()) {
        return Some("non-finite torque or velocity".into());
    }
    let tau_max = tau.amax();
    if tau_max > config.safety.max_abs_torque {
        return Some(format!(
            "|tau| = {tau_max:.3} exceeds {}",
            config.safety.max_abs_torque
        ));
    }
    let qd_max = qd.amax();
    if qd_max > config.safety.max_abs_velocity {
        return Some(format!(
            "|qd| = {qd_max:.3} exceeds {}",
            config.safety.max_abs_velocity
        ));
    }
    None
}
