//! Algebraic identities connecting the constant-step direct learner to
//! classical controllers.
//!
//! Two results are checked numerically:
//!
//! * Gradient descent with constant step `Δt` on a weighted sum of position,
//!   velocity and acceleration tracking losses (constant offset, `J_f = I`)
//!   is a PID law: the summed gradients telescope into integral, position
//!   and velocity error terms.
//! * The regularized constant-step rule `τ⁺ = α(q̈_d − q̈_a) + λτ`, with
//!   finite-differenced `q̈_a`, unrolls into virtual-velocity feedback
//!   `(α/Δt)(ṽ − q̇)`. Finite sums leave a boundary term `λᵗ q̇⁻¹` that is
//!   tracked here so equalities hold exactly rather than asymptotically.

use nalgebra::DVector;

use crate::dynamics::{check_dim, JointVec};
use crate::error::{Error, Result};

/// Weights on the position, velocity and acceleration loss terms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PidWeights {
    pub alpha_pid: f64,
    pub beta_pid: f64,
    pub gamma_pid: f64,
}

impl PidWeights {
    pub fn new(alpha_pid: f64, beta_pid: f64, gamma_pid: f64) -> Result<Self> {
        let w = [alpha_pid, beta_pid, gamma_pid];
        if w.iter().any(|x| !(*x >= 0.0)) || w.iter().all(|x| *x == 0.0) {
            return Err(Error::InvalidParameter(
                "PID weights must be non-negative and not all zero".into(),
            ));
        }
        Ok(PidWeights {
            alpha_pid,
            beta_pid,
            gamma_pid,
        })
    }
}

/// Desired and actual position/velocity/acceleration signals on a uniform
/// time grid. Index `k` is time `k·dt`.
#[derive(Debug, Clone)]
pub struct SignalLog {
    pub dt: f64,
    pub q: Vec<JointVec>,
    pub qd: Vec<JointVec>,
    pub qdd_a: Vec<JointVec>,
    pub q_d: Vec<JointVec>,
    pub qd_d: Vec<JointVec>,
    pub qdd_d: Vec<JointVec>,
}

fn euler_rollout(
    dt: f64,
    q0: &JointVec,
    qd0: &JointVec,
    qdd: &[JointVec],
) -> (Vec<JointVec>, Vec<JointVec>) {
    let mut q = Vec::with_capacity(qdd.len());
    let mut qd = Vec::with_capacity(qdd.len());
    let (mut qk, mut qdk) = (q0.clone(), qd0.clone());
    for a in qdd {
        q.push(qk.clone());
        qd.push(qdk.clone());
        qk += &qdk * dt;
        qdk += a * dt;
    }
    (q, qd)
}

impl SignalLog {
    /// Builds positions and velocities for both signals by explicit Euler
    /// (`q⁺ = q + Δt q̇`, `q̇⁺ = q̇ + Δt q̈`) from a shared initial state,
    /// which is the discretization under which the PID sums telescope.
    pub fn from_accelerations(
        dt: f64,
        q0: &JointVec,
        qd0: &JointVec,
        qdd_d: Vec<JointVec>,
        qdd_a: Vec<JointVec>,
    ) -> Result<Self> {
        if !(dt > 0.0) {
            return Err(Error::InvalidParameter("log dt must be positive".into()));
        }
        check_dim("log length", qdd_d.len(), qdd_a.len())?;
        let (q_d, qd_d) = euler_rollout(dt, q0, qd0, &qdd_d);
        let (q, qd) = euler_rollout(dt, q0, qd0, &qdd_a);
        Ok(SignalLog {
            dt,
            q,
            qd,
            qdd_a,
            q_d,
            qd_d,
            qdd_d,
        })
    }

    pub fn len(&self) -> usize {
        self.qdd_d.len()
    }

    pub fn is_empty(&self) -> bool {
        self.qdd_d.is_empty()
    }

    fn check_index(&self, t: usize) -> Result<()> {
        if t >= self.len() {
            return Err(Error::IndexOutOfRange {
                index: t,
                len: self.len(),
            });
        }
        Ok(())
    }
}

/// `∇l^t = −[α(q_d − q_a) + β(q̇_d − q̇_a) + γ(q̈_d − q̈_a)]` at step `t`, for
/// the constant offset model.
pub fn pid_term_gradients(weights: &PidWeights, log: &SignalLog, t: usize) -> Result<DVector<f64>> {
    log.check_index(t)?;
    Ok(-((&log.q_d[t] - &log.q[t]) * weights.alpha_pid
        + (&log.qd_d[t] - &log.qd[t]) * weights.beta_pid
        + (&log.qdd_d[t] - &log.qdd_a[t]) * weights.gamma_pid))
}

/// The torque after `t` constant-step gradient updates, computed two ways.
#[derive(Debug, Clone, PartialEq)]
pub struct PidTorque {
    /// `−Δt Σ_{κ<t} ∇l^κ`.
    pub summed: JointVec,
    /// `α Σ_{κ<t} (q_d − q_a)Δt + β (q_d^t − q_a^t) + γ (q̇_d^t − q̇_a^t)`.
    pub collapsed: JointVec,
}

/// Summed-gradient torque and the collapsed PID law at step `t`. The
/// collapse needs matching desired/actual position and velocity at `t = 0`.
pub fn gd_pid_torque(weights: &PidWeights, log: &SignalLog, t: usize) -> Result<PidTorque> {
    log.check_index(t)?;
    let tol =
        |a: &JointVec, b: &JointVec| (a - b).amax() <= 1e-12 * a.amax().max(b.amax()).max(1.0);
    if !tol(&log.q_d[0], &log.q[0]) {
        return Err(Error::MismatchedInitialConditions("position"));
    }
    if !tol(&log.qd_d[0], &log.qd[0]) {
        return Err(Error::MismatchedInitialConditions("velocity"));
    }
    let n = log.q[0].len();
    let mut summed = JointVec::zeros(n);
    let mut integral = JointVec::zeros(n);
    for k in 0..t {
        summed -= pid_term_gradients(weights, log, k)? * log.dt;
        integral += (&log.q_d[k] - &log.q[k]) * log.dt;
    }
    let collapsed = integral * weights.alpha_pid
        + (&log.q_d[t] - &log.q[t]) * weights.beta_pid
        + (&log.qd_d[t] - &log.qd[t]) * weights.gamma_pid;
    Ok(PidTorque { summed, collapsed })
}

/// Step size and retention of the constant-step rule. The retention
/// `λ = 1 − α λ̃` folds the regularizer `λ̃` into a forgetting factor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VvParams {
    pub alpha_gain: f64,
    pub lambda_ret: f64,
    pub dt: f64,
}

impl VvParams {
    pub fn new(alpha_gain: f64, lambda_ret: f64, dt: f64) -> Result<Self> {
        if !(alpha_gain > 0.0) || !(lambda_ret > 0.0 && lambda_ret <= 1.0) || !(dt > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "need alpha > 0, lambda in (0, 1], dt > 0 (got {alpha_gain}, {lambda_ret}, {dt})"
            )));
        }
        Ok(VvParams {
            alpha_gain,
            lambda_ret,
            dt,
        })
    }

    /// The velocity-feedback gain `α/Δt` the acceleration rule is equivalent to.
    pub fn velocity_gain(&self) -> f64 {
        self.alpha_gain / self.dt
    }
}

/// Velocity measurements and desired accelerations for the virtual-velocity
/// identities. `qd_prior` is the reading one step before `qd[0]`, needed for
/// the first finite difference.
#[derive(Debug, Clone)]
pub struct VelocityLog {
    pub dt: f64,
    pub qd_prior: JointVec,
    pub qd: Vec<JointVec>,
    pub qdd_d: Vec<JointVec>,
}

impl VelocityLog {
    pub fn len(&self) -> usize {
        self.qd.len()
    }

    pub fn is_empty(&self) -> bool {
        self.qd.is_empty()
    }

    /// `q̈_a^t = (q̇^t − q̇^{t−1}) / Δt`.
    pub fn finite_difference_accels(&self) -> Vec<JointVec> {
        let mut prev = &self.qd_prior;
        self.qd
            .iter()
            .map(|v| {
                let a = (v - prev) / self.dt;
                prev = v;
                a
            })
            .collect()
    }

    /// The same log with velocities delayed one step: `q̇'^k = q̇^{k−1}`.
    pub fn delayed(&self) -> VelocityLog {
        let mut qd = Vec::with_capacity(self.qd.len());
        qd.push(self.qd_prior.clone());
        qd.extend(
            self.qd
                .iter()
                .take(self.qd.len().saturating_sub(1))
                .cloned(),
        );
        VelocityLog {
            dt: self.dt,
            qd_prior: self.qd_prior.clone(),
            qd,
            qdd_d: self.qdd_d.clone(),
        }
    }

    fn check_index(&self, t: usize) -> Result<()> {
        if t >= self.qd.len() || t >= self.qdd_d.len() {
            return Err(Error::IndexOutOfRange {
                index: t,
                len: self.qd.len().min(self.qdd_d.len()),
            });
        }
        Ok(())
    }
}

/// `τ^{t+1} = α(q̈_d^t − q̈_a^t) + λ τ^t` from `τ⁰ = 0`. Returns `τ⁰ … τ^T`.
pub fn recursive_tau(
    params: &VvParams,
    qdd_d: &[JointVec],
    qdd_a: &[JointVec],
) -> Result<Vec<JointVec>> {
    check_dim("acceleration stream", qdd_d.len(), qdd_a.len())?;
    let n = qdd_d.first().map_or(0, |v| v.len());
    let mut out = Vec::with_capacity(qdd_d.len() + 1);
    out.push(JointVec::zeros(n));
    for (d, a) in qdd_d.iter().zip(qdd_a) {
        let prev = out.last().expect("non-empty");
        out.push((d - a) * params.alpha_gain + prev * params.lambda_ret);
    }
    Ok(out)
}

/// Virtual velocity `v⁺ = λv + (1 − λ)q̇ + Δt q̈_d` and `τ⁺ = α(v⁺ − q̇)`.
/// Returns `(v¹ … v^T, τ¹ … τ^T)`.
pub fn classical_vv_tau(
    params: &VvParams,
    log: &VelocityLog,
    v0: &JointVec,
) -> (Vec<JointVec>, Vec<JointVec>) {
    let lam = params.lambda_ret;
    let mut v = v0.clone();
    let mut vs = Vec::with_capacity(log.len());
    let mut taus = Vec::with_capacity(log.len());
    for (qd, a) in log.qd.iter().zip(&log.qdd_d) {
        v = &v * lam + qd * (1.0 - lam) + a * params.dt;
        taus.push((&v - qd) * params.alpha_gain);
        vs.push(v.clone());
    }
    (vs, taus)
}

/// Direct summation of the unrolled constant-step rule at step `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct OnlineExpansion {
    /// `ṽ^{t+1} = Σ_{κ<t} (1−λ)λ^κ q̇^{t−κ−1} + Σ_{κ≤t} λ^κ Δt q̈_d^{t−κ}`.
    pub virtual_velocity: JointVec,
    /// `λᵗ q̇⁻¹`, left over because the finite sum does not telescope fully.
    pub boundary: JointVec,
    /// `(α/Δt)(ṽ^{t+1} + boundary − q̇^t)`, equal to `τ^{t+1}` of the recursion.
    pub tau: JointVec,
}

pub fn expand_online_vv(params: &VvParams, log: &VelocityLog, t: usize) -> Result<OnlineExpansion> {
    log.check_index(t)?;
    let lam = params.lambda_ret;
    let n = log.qd_prior.len();
    let mut sum = CompensatedSum::new(n);
    for kappa in 0..=t {
        let pow = lam.powi(kappa as i32);
        if kappa < t {
            sum.add(&log.qd[t - kappa - 1], (1.0 - lam) * pow);
        }
        sum.add(&log.qdd_d[t - kappa], pow * params.dt);
    }
    let boundary = &log.qd_prior * lam.powi(t as i32);
    let virtual_velocity = sum.value();
    let tau = (&virtual_velocity + &boundary - &log.qd[t]) * params.velocity_gain();
    Ok(OnlineExpansion {
        virtual_velocity,
        boundary,
        tau,
    })
}

/// Direct summation of the classical virtual velocity at step `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassicalExpansion {
    /// `Σ_{κ≤t} (1−λ)λ^κ q̇^{t−κ}`.
    pub weighted_velocity: JointVec,
    /// `Σ_{κ≤t} λ^κ Δt q̈_d^{t−κ}`.
    pub integrated_accel: JointVec,
    /// `λ^{t+1} v⁰`.
    pub initial_term: JointVec,
    /// `v^{t+1}`: the sum of the three parts.
    pub virtual_velocity: JointVec,
    /// `α (v^{t+1} − q̇^t)`.
    pub tau: JointVec,
}

pub fn expand_classical_vv(
    params: &VvParams,
    log: &VelocityLog,
    t: usize,
    v0: &JointVec,
) -> Result<ClassicalExpansion> {
    log.check_index(t)?;
    let lam = params.lambda_ret;
    let n = v0.len();
    let mut weighted = CompensatedSum::new(n);
    let mut integrated = CompensatedSum::new(n);
    for kappa in 0..=t {
        let pow = lam.powi(kappa as i32);
        weighted.add(&log.qd[t - kappa], (1.0 - lam) * pow);
        integrated.add(&log.qdd_d[t - kappa], pow * params.dt);
    }
    let initial_term = v0 * lam.powi(t as i32 + 1);
    let mut total = weighted.clone();
    total.merge(&integrated);
    total.add(&initial_term, 1.0);
    let (weighted_velocity, integrated_accel) = (weighted.value(), integrated.value());
    let virtual_velocity = total.value();
    let tau = (&virtual_velocity - &log.qd[t]) * params.alpha_gain;
    Ok(ClassicalExpansion {
        weighted_velocity,
        integrated_accel,
        initial_term,
        virtual_velocity,
        tau,
    })
}

/// Neumaier-compensated running sum of scaled vectors, so the expansions
/// are accurate references rather than a second source of rounding.
#[derive(Debug, Clone)]
struct CompensatedSum {
    sum: JointVec,
    comp: JointVec,
}

impl CompensatedSum {
    fn new(n: usize) -> Self {
        CompensatedSum {
            sum: JointVec::zeros(n),
            comp: JointVec::zeros(n),
        }
    }

    fn add(&mut self, v: &JointVec, scale: f64) {
        for i in 0..v.len() {
            let x = v[i] * scale;
            let s = self.sum[i];
            let t = s + x;
            self.comp[i] += if s.abs() >= x.abs() {
                (s - t) + x
            } else {
                (x - t) + s
            };
            self.sum[i] = t;
        }
    }

    fn merge(&mut self, other: &CompensatedSum) {
        self.add(&other.sum, 1.0);
        self.add(&other.comp, 1.0);
    }

    fn value(&self) -> JointVec {
        &self.sum + &self.comp
    }
}

/// `‖a − b‖∞ / max(‖a‖∞, ‖b‖∞)`, zero when both vanish.
pub fn relative_error(a: &JointVec, b: &JointVec) -> f64 {
    let scale = a.amax().max(b.amax());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).amax() / scale
    }
}
