//! Property checks shared by the proptest suite and the acceptance runner.
//! Each check takes explicit inputs and returns a description of the first
//! violation it finds.
#![allow(dead_code)]

use std::sync::Arc;

use nalgebra::{DMatrix, DVector, Matrix2, Vector2};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use doomed::dynamics::{
    forward_dynamics, integrate_step, inverse_dynamics, ApproxModel, ConstantModel, PerfectModel,
    Plant,
};
use doomed::harness::episode::TraceRow;
use doomed::harness::{compute_metrics, run_episode, ExperimentConfig};
use doomed::learner::{
    direct_gradient, gd_step, indirect_step, loss_oracle, momentum_step, scale_by_variance,
    smoother_step, LearnerParams, LearnerState, OffsetModel, TaskMap, UpdateRule,
};
use doomed::plants::{
    make_biased_arm_pair, make_planar_pair, make_stiction_plant, BiasedArmPlant,
    DoubleIntegratorPlant, PlanarSinusoidPlant,
};
use doomed::policies::{lqr_chain, lqr_steady_state_gain, AccelPolicy, PdPointPolicy};
use doomed::{JointVec, State};

pub type Check = Result<(), String>;

pub fn uniform(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> JointVec {
    JointVec::from_fn(n, |_, _| rng.gen_range(-scale..=scale))
}

fn inf_norm(m: &DMatrix<f64>) -> f64 {
    m.row_iter().map(|r| r.iter().map(|x| x.abs()).sum::<f64>()).fold(0.0, f64::max)
}

// ---------------------------------------------------------------- gradients

/// One random gradient-oracle case.
pub struct GradientCase {
    pub label: &'static str,
    pub plant: Arc<dyn Plant>,
    pub model: Arc<dyn ApproxModel>,
    pub offset: OffsetModel,
    pub state: State,
    pub qdd_d: JointVec,
    pub w: DVector<f64>,
}

/// Cycles through the planar, biased-arm and double-integrator plants; the
/// planar case alternates between the constant and a configuration-dependent
/// task-space offset.
pub fn gradient_case(rng: &mut ChaCha8Rng, index: usize) -> GradientCase {
    match index % 3 {
        0 => {
            let (p, m) = make_planar_pair();
            let offset = if index % 2 == 0 {
                OffsetModel::constant(2)
            } else {
                let a = rng.gen_range(0.5..2.0);
                let ee = TaskMap::new(2, move |q: &JointVec| {
                    let (s1, c1) = q[0].sin_cos();
                    let (s12, c12) = (q[0] + q[1]).sin_cos();
                    DMatrix::from_row_slice(2, 2, &[-a * s1 - s12, -s12, a * c1 + c12, c12])
                });
                let tilt = TaskMap::constant(DMatrix::from_row_slice(1, 2, &[1.0, -0.5]));
                OffsetModel::task_stacked(2, vec![ee, tilt]).unwrap()
            };
            let p_dim = offset.param_dim();
            GradientCase {
                label: "planar",
                plant: Arc::new(p),
                model: Arc::new(m),
                state: State::new(uniform(rng, 2, 2.0), uniform(rng, 2, 2.0), 0.0).unwrap(),
                qdd_d: uniform(rng, 2, 10.0),
                w: uniform(rng, p_dim, 5.0),
                offset,
            }
        }
        1 => {
            let n = rng.gen_range(1..=7);
            let inertia = JointVec::from_fn(n, |_, _| rng.gen_range(0.5..2.0));
            let damping = JointVec::from_fn(n, |_, _| rng.gen_range(0.0..1.0));
            let (p, m) = make_biased_arm_pair(n, &inertia, &damping).unwrap();
            GradientCase {
                label: "biased arm",
                plant: Arc::new(p),
                model: Arc::new(m),
                offset: OffsetModel::constant(n),
                state: State::new(uniform(rng, n, 2.0), uniform(rng, n, 3.0), 0.0).unwrap(),
                qdd_d: uniform(rng, n, 10.0),
                w: uniform(rng, n, 5.0),
            }
        }
        _ => {
            let n = rng.gen_range(1..=4);
            let mass = rng.gen_range(0.2..5.0);
            let p = DoubleIntegratorPlant::new(n, mass)
                .unwrap()
                .with_disturbance(uniform(rng, n, 3.0))
                .unwrap();
            GradientCase {
                label: "double integrator",
                plant: Arc::new(p),
                model: Arc::new(ConstantModel::scaled_identity(n, rng.gen_range(0.2..5.0))),
                offset: OffsetModel::constant(n),
                state: State::new(uniform(rng, n, 2.0), uniform(rng, n, 2.0), 0.0).unwrap(),
                qdd_d: uniform(rng, n, 10.0),
                w: uniform(rng, n, 5.0),
            }
        }
    }
}

/// Normwise relative error between the measured-acceleration gradient and
/// the central difference of the true-mass loss.
pub fn gradient_relative_error(case: &GradientCase, h: f64) -> f64 {
    let loss = |w: &DVector<f64>| {
        loss_oracle(
            case.plant.as_ref(),
            case.model.as_ref(),
            &case.state,
            &case.qdd_d,
            &case.offset,
            w,
        )
        .unwrap()
    };
    let f = case.offset.offset(&case.state.q, &case.w).unwrap();
    let tau = inverse_dynamics(case.model.as_ref(), &case.state, &case.qdd_d).unwrap() + f;
    let qdd_a = forward_dynamics(case.plant.as_ref(), &case.state, &tau).unwrap();
    let g = direct_gradient(&case.offset, &case.state.q, &case.qdd_d, &qdd_a).unwrap();
    let fd = DVector::from_fn(case.w.len(), |i, _| {
        let mut plus = case.w.clone();
        let mut minus = case.w.clone();
        plus[i] += h;
        minus[i] -= h;
        (loss(&plus) - loss(&minus)) / (2.0 * h)
    });
    (&g - &fd).amax() / g.amax().max(fd.amax()).max(1e-12)
}

// ----------------------------------------------------------------- dynamics

pub fn mass_symmetric(plant: &dyn Plant, q: &JointVec) -> Check {
    let m = plant.mass_matrix(q);
    let asym = inf_norm(&(&m - m.transpose()));
    if asym <= 1e-12 * inf_norm(&m) {
        Ok(())
    } else {
        Err(format!("‖M − Mᵀ‖∞ = {asym:e} at q = {q:?}"))
    }
}

/// Forward dynamics of the inverse-dynamics torque returns the commanded
/// acceleration when the model encodes the plant exactly.
pub fn fd_inverts_id(plant: &dyn Plant, model: &dyn ApproxModel, state: &State, qdd: &JointVec) -> Check {
    let tau = inverse_dynamics(model, state, qdd).map_err(|e| e.to_string())?;
    let back = forward_dynamics(plant, state, &tau).map_err(|e| e.to_string())?;
    let err = (&back - qdd).amax();
    if err <= 1e-10 * qdd.amax().max(1.0) {
        Ok(())
    } else {
        Err(format!("FD∘ID residual {err:e}"))
    }
}

/// Plant/model pairs whose model reproduces every torque term of the plant.
pub fn matched_pair(rng: &mut ChaCha8Rng, which: usize) -> (Arc<dyn Plant>, Arc<dyn ApproxModel>) {
    match which % 3 {
        0 => {
            let p: Arc<dyn Plant> = Arc::new(PlanarSinusoidPlant);
            (p.clone(), Arc::new(PerfectModel::new(p)))
        }
        1 => {
            let n = rng.gen_range(1..=7);
            let inertia = JointVec::from_fn(n, |_, _| rng.gen_range(0.5..2.0));
            let p: Arc<dyn Plant> =
                Arc::new(BiasedArmPlant::new(inertia, JointVec::from_element(n, 0.5)).unwrap());
            (p.clone(), Arc::new(PerfectModel::new(p)))
        }
        _ => {
            let n = rng.gen_range(1..=4);
            let m = rng.gen_range(0.2..5.0);
            (
                Arc::new(DoubleIntegratorPlant::new(n, m).unwrap()),
                Arc::new(ConstantModel::scaled_identity(n, m)),
            )
        }
    }
}

/// Undamped double integrator with no torque keeps its velocity exactly.
pub fn free_flight_keeps_velocity(qd: &JointVec, dt: f64, steps: usize) -> Check {
    let n = qd.len();
    let plant = DoubleIntegratorPlant::new(n, 1.0).unwrap();
    let mut s = State::new(JointVec::zeros(n), qd.clone(), 0.0).unwrap();
    for k in 0..steps {
        let a = forward_dynamics(&plant, &s, &JointVec::zeros(n)).map_err(|e| e.to_string())?;
        s = integrate_step(&s, &a, dt).map_err(|e| e.to_string())?;
        if s.qd != *qd {
            return Err(format!("velocity drifted at step {k}"));
        }
    }
    Ok(())
}

// ------------------------------------------------------------------- plants

pub fn planar_min_eigenvalue(q: &JointVec) -> f64 {
    PlanarSinusoidPlant
        .mass_matrix(q)
        .symmetric_eigenvalues()
        .min()
}

/// A joint resting under a torque no larger than breakaway never moves.
pub fn stiction_rest_is_closed(mass: f64, breakaway: f64, torque_frac: f64, steps: usize) -> Check {
    let plant = make_stiction_plant(mass, breakaway, 0.01).map_err(|e| e.to_string())?;
    let tau = JointVec::from_element(1, torque_frac * breakaway);
    let start = State::at_rest(JointVec::from_element(1, 0.3));
    let mut s = start.clone();
    for k in 0..steps {
        let a = forward_dynamics(&plant, &s, &tau).map_err(|e| e.to_string())?;
        s = integrate_step(&s, &a, 1e-3).map_err(|e| e.to_string())?;
        if s.q != start.q || s.qd[0] != 0.0 {
            return Err(format!("moved at step {k}: q = {}, qd = {}", s.q[0], s.qd[0]));
        }
    }
    Ok(())
}

pub fn biased_arm_disturbance_bounded(damping: &JointVec, q: &JointVec, qd: &JointVec) -> Check {
    let n = q.len();
    let p = BiasedArmPlant::new(JointVec::from_element(n, 1.0), damping.clone())
        .map_err(|e| e.to_string())?;
    let d = p.disturbance(q, qd);
    for i in 0..n {
        let bound = 7.0 + 5.0 + damping[i] * qd[i].abs();
        if d[i].abs() > bound * (1.0 + 1e-15) {
            return Err(format!("|d_{i}| = {} exceeds {bound}", d[i].abs()));
        }
    }
    Ok(())
}

// ----------------------------------------------------------------- policies

/// `f(s₁) + f(s₂) − f(0) = f(s₁ + s₂)` for the PD law.
pub fn pd_superposition(target: &JointVec, k: f64, d: f64, s1: &State, s2: &State) -> Check {
    let p = PdPointPolicy::new(target.clone(), k, d).map_err(|e| e.to_string())?;
    let n = target.len();
    let zero = State::at_rest(JointVec::zeros(n));
    let sum = State::new(&s1.q + &s2.q, &s1.qd + &s2.qd, 0.0).unwrap();
    let lhs = p.eval(0.0, s1) + p.eval(0.0, s2) - p.eval(0.0, &zero);
    let rhs = p.eval(0.0, &sum);
    let scale = lhs.amax().max(rhs.amax()).max(1.0);
    let err = (&lhs - &rhs).amax();
    if err <= 1e-12 * scale {
        Ok(())
    } else {
        Err(format!("superposition residual {err:e}"))
    }
}

/// Spectral radius of the closed-loop double integrator under the
/// steady-state regulator gain.
pub fn lqr_closed_loop_radius(q_pos: f64, q_vel: f64, r: f64, dt: f64) -> f64 {
    let k = lqr_steady_state_gain(q_pos, q_vel, r, dt).unwrap();
    let a = Matrix2::new(1.0, dt, 0.0, 1.0);
    let b = Vector2::new(0.5 * dt * dt, dt);
    let cl = a - b * k;
    cl.complex_eigenvalues()
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
}

/// Chained regulators evaluate identically on repeat, and large output jumps
/// at a fixed state happen only where the active segment changes.
pub fn chain_piecewise_continuous(goals: &[JointVec], state: &State, dt: f64) -> Check {
    let build = || lqr_chain(goals, 100.0, 10.0, 1.0, 0.5, dt).unwrap();
    let (a, b) = (build(), build());
    let total = a.total_duration();
    let steps = (total / dt).round() as usize;
    let mut switches = 0;
    let mut prev = a.eval(0.0, state);
    let mut prev_seg = a.segment(0.0);
    for k in 1..steps {
        let t = k as f64 * dt;
        let out = a.eval(t, state);
        if out != b.eval(t, state) || out != a.eval(t, state) {
            return Err(format!("non-deterministic output at t = {t}"));
        }
        let seg = a.segment(t);
        let jump = (&out - &prev).amax();
        if seg != prev_seg {
            switches += 1;
        } else if jump > 0.5 {
            return Err(format!("jump {jump} inside segment {seg} at t = {t}"));
        }
        prev = out;
        prev_seg = seg;
    }
    if switches != goals.len() - 1 || switches > 9 {
        return Err(format!("{switches} switches for {} segments", goals.len()));
    }
    Ok(())
}

// ------------------------------------------------------------------ learner

/// With a constant error and forgetting, plain descent settles where
/// `λ w* = e`.
pub fn regularized_fixed_point(e: &JointVec, eta: f64, lambda: f64) -> Check {
    let p = LearnerParams {
        eta_lr: eta,
        lambda_reg: lambda,
        gamma_mom: 0.0,
        alpha_var: 0.0,
        rule: UpdateRule::Gradient,
        ..LearnerParams::default()
    };
    let g = -e;
    let mut s = LearnerState::new(e.len(), e.len());
    // Contraction 1 − ηλ per step; iterate until it has shrunk below 1e-14.
    let iters = (32.2 / (eta * lambda)).ceil() as usize + 10;
    for _ in 0..iters {
        s = gd_step(&p, &s, &g);
    }
    let err = (&s.w * lambda - e).amax();
    if err <= 1e-8 * e.amax().max(1.0) {
        Ok(())
    } else {
        Err(format!("λw* − e = {err:e}"))
    }
}

pub fn variance_scaling_shrinks(alpha: f64, v: &JointVec, g: &DVector<f64>) -> Check {
    let s = scale_by_variance(alpha, v, g);
    for i in 0..g.len() {
        let flipped = s[i] * g[i] < 0.0 || (g[i] != 0.0 && s[i] == 0.0);
        if flipped || !(s[i].abs() <= g[i].abs()) {
            return Err(format!("component {i}: {} -> {}", g[i], s[i]));
        }
    }
    Ok(())
}

/// Feeds both update rules the same gradients: an arbitrary prefix, then a
/// constant tail. Compares per-step changes of `w` after `burn_in` constant
/// steps.
pub fn momentum_smoother_agree(
    prefix: &[DVector<f64>],
    tail: &DVector<f64>,
    eta: f64,
    gamma: f64,
    burn_in: usize,
    compare: usize,
) -> Result<f64, String> {
    let n = tail.len();
    let p = LearnerParams {
        eta_lr: eta,
        lambda_reg: 0.0,
        gamma_mom: gamma,
        alpha_var: 0.0,
        ..LearnerParams::default()
    };
    let mut a = LearnerState::new(n, n);
    let mut b = a.clone();
    for g in prefix {
        a = momentum_step(&p, &a, g);
        b = smoother_step(&p, &b, g);
    }
    let mut worst = 0.0f64;
    for k in 0..burn_in + compare {
        let na = momentum_step(&p, &a, tail);
        let nb = smoother_step(&p, &b, tail);
        if k >= burn_in {
            let da = &na.w - &a.w;
            let db = &nb.w - &b.w;
            worst = worst.max((da - db).amax());
        }
        a = na;
        b = nb;
    }
    if worst <= 1e-8 {
        Ok(worst)
    } else {
        Err(format!("step difference {worst:e} after {burn_in} constant steps"))
    }
}

/// Stuck joint, zero model mass: the applied torque is exactly `w`, the
/// residual is exactly zero and the indirect learner never moves again.
pub fn indirect_frozen_when_stuck(w0: f64, eta: f64, steps: usize) -> Check {
    let model = ConstantModel::scaled_identity(1, 0.0);
    let p = LearnerParams {
        eta_lr: eta,
        rule: UpdateRule::Gradient,
        ..LearnerParams::default()
    };
    let mut s = LearnerState::new(1, 1);
    s.w[0] = w0;
    let state = State::at_rest(JointVec::from_element(1, 0.0));
    let stuck = JointVec::zeros(1);
    for k in 0..steps {
        let qdd_d = JointVec::from_element(1, (k as f64).sin() * 3.0);
        let tau = inverse_dynamics(&model, &state, &qdd_d).unwrap() + &s.w;
        let next = indirect_step(&p, &s, &model, &state, &stuck, &tau).map_err(|e| e.to_string())?;
        if next.w != s.w {
            return Err(format!("w moved at step {k}: {} -> {}", s.w[0], next.w[0]));
        }
        s = next;
    }
    Ok(())
}

// ------------------------------------------------------------------ harness

fn rows_bit_equal(a: &TraceRow, b: &TraceRow) -> bool {
    let same = |x: &JointVec, y: &JointVec| x.iter().zip(y.iter()).all(|(p, q)| p.to_bits() == q.to_bits());
    a.t.to_bits() == b.t.to_bits()
        && a.segment == b.segment
        && same(&a.q, &b.q)
        && same(&a.qd, &b.qd)
        && same(&a.qdd_d, &b.qdd_d)
        && same(&a.qdd_a_est, &b.qdd_a_est)
        && same(&a.tau_id, &b.tau_id)
        && same(&a.f_offset, &b.f_offset)
        && same(&a.tau_applied, &b.tau_applied)
        && same(&a.w, &b.w)
        && same(&a.accel_error, &b.accel_error)
        && same(&a.smoothed_accel_error, &b.smoothed_accel_error)
}

/// Short noisy biased-arm run used by the harness properties.
pub fn small_arm_config(seed: u64) -> ExperimentConfig {
    let mut c = ExperimentConfig::biased_arm();
    c.set("plant.dof", "2").unwrap();
    c.set("policy.segments", "2").unwrap();
    c.set("policy.segment_duration", "0.5").unwrap();
    c.sim.duration = 1.0;
    c.learning_on_at = 0.5;
    c.sim.seed = seed;
    c
}

pub fn deterministic(config: &ExperimentConfig) -> Check {
    let a = run_episode(config).map_err(|e| e.to_string())?;
    let b = run_episode(config).map_err(|e| e.to_string())?;
    if a.len() != b.len() || !a.rows.iter().zip(&b.rows).all(|(x, y)| rows_bit_equal(x, y)) {
        return Err("traces differ".into());
    }
    let (ma, mb) = (compute_metrics(&a).unwrap(), compute_metrics(&b).unwrap());
    let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
    if bits(&ma.mean_abs_accel_error) != bits(&mb.mean_abs_accel_error)
        || bits(&ma.mean_accel_error) != bits(&mb.mean_accel_error)
        || bits(&ma.mean_abs_offset) != bits(&mb.mean_abs_offset)
    {
        return Err("metrics differ".into());
    }
    Ok(())
}

/// Replays each control interval with the recorded torque held for all
/// `k` substeps and requires the next tick's true state to match bit for
/// bit.
pub fn torque_held_between_ticks(config: &ExperimentConfig) -> Check {
    let mut plan = doomed::harness::episode::plan_rng(config.sim.seed);
    let exp = config.build(&mut plan).map_err(|e| e.to_string())?;
    let trace = run_episode(config).map_err(|e| e.to_string())?;
    let k = config.sim.substeps();
    for (i, pair) in trace.rows.windows(2).enumerate() {
        let mut s = State::new(pair[0].q.clone(), pair[0].qd.clone(), pair[0].t).unwrap();
        for _ in 0..k {
            let a = forward_dynamics(exp.plant.as_ref(), &s, &pair[0].tau_applied)
                .map_err(|e| e.to_string())?;
            s = integrate_step(&s, &a, config.sim.dt_sim).map_err(|e| e.to_string())?;
        }
        if s.q != pair[1].q || s.qd != pair[1].qd {
            return Err(format!("tick {i}: replay with held torque diverges"));
        }
    }
    Ok(())
}

pub fn abs_mean_dominates(config: &ExperimentConfig) -> Check {
    let trace = run_episode(config).map_err(|e| e.to_string())?;
    let m = compute_metrics(&trace).map_err(|e| e.to_string())?;
    for j in 0..m.dof() {
        if m.mean_abs_accel_error[j] < m.mean_accel_error[j].abs() {
            return Err(format!("joint {j}: mean |e| < |mean e|"));
        }
    }
    Ok(())
}

/// Every tick before learning switches on matches a run that never learns.
pub fn learning_off_prefix_identical(config: &ExperimentConfig) -> Check {
    let on = run_episode(config).map_err(|e| e.to_string())?;
    let mut never = config.clone();
    never.learning_enabled = false;
    let off = run_episode(&never).map_err(|e| e.to_string())?;
    let prefix: Vec<_> = on.rows.iter().take_while(|r| !r.learning).collect();
    if prefix.is_empty() || prefix.len() == on.len() {
        return Err(format!("degenerate prefix of {} ticks", prefix.len()));
    }
    for (i, (a, b)) in prefix.iter().zip(&off.rows).enumerate() {
        if !rows_bit_equal(a, b) {
            return Err(format!("tick {i} differs before learning starts"));
        }
    }
    Ok(())
}
