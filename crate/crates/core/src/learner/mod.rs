//! Online learners for the inverse-dynamics torque offset.
//!
//! The direct learner descends the acceleration-space loss
//! `½‖q̈_d − q̈_a(w)‖²_M`, whose gradient `−J_fᵀ(q̈_d − q̈_a)` is measurable on
//! the running system. Per control tick, [`learner_tick`] runs
//!
//! 1. the variance estimate of the measured accelerations,
//! 2. the direct gradient,
//! 3. per-dimension variance scaling `1 / (1 + α vᵢ)`,
//! 4. the configured update rule, with the regularizer acting on `w`,
//!
//! and emits the new offset. [`indirect_step`] is the torque-space baseline
//! trained on observed rather than desired accelerations.

mod estimator;
mod offset;

pub use estimator::{estimate_accel, AccelEstimate, AccelEstimator};
pub use offset::{direct_gradient, loss_oracle, OffsetModel, TaskMap};

use nalgebra::DVector;

use crate::dynamics::{check_dim, ApproxModel, JointVec, State};
use crate::error::{Error, Result};

/// How the (scaled) gradient is turned into a parameter change.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UpdateRule {
    /// `w ← (1 − ηλ) w − η g`.
    Gradient,
    /// `u ← γ u − (1 − γ) g`, `w ← (1 − ηλ) w + η u`.
    Momentum,
    /// `u ← (1 − ηλ) u − η g`, `w ← γ w + (1 − γ) u`.
    Smoother,
}

impl std::str::FromStr for UpdateRule {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "gradient" | "plain" | "gd" => Ok(UpdateRule::Gradient),
            "momentum" => Ok(UpdateRule::Momentum),
            "smoother" => Ok(UpdateRule::Smoother),
            other => Err(format!("unknown update rule `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LearnerParams {
    pub eta_lr: f64,
    pub lambda_reg: f64,
    pub gamma_mom: f64,
    pub alpha_var: f64,
    pub adapt_forgetting: bool,
    pub forgetting_error_scale: f64,
    /// Regularizer reached when the acceleration error saturates the ramp.
    pub lambda_max: f64,
    pub variance_decay: f64,
    pub rule: UpdateRule,
}

impl Default for LearnerParams {
    fn default() -> Self {
        LearnerParams {
            eta_lr: 0.02,
            lambda_reg: 0.0,
            gamma_mom: 0.9,
            alpha_var: 0.0,
            adapt_forgetting: false,
            forgetting_error_scale: 1.0,
            lambda_max: 1.0,
            variance_decay: 0.999,
            rule: UpdateRule::Momentum,
        }
    }
}

impl LearnerParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if !(self.eta_lr > 0.0) || !self.eta_lr.is_finite() {
            return bad(format!(
                "learning rate must be positive, got {}",
                self.eta_lr
            ));
        }
        if !(self.lambda_reg >= 0.0) || !(self.lambda_max >= 0.0) {
            return bad("regularizer must be non-negative".into());
        }
        if !(0.0..1.0).contains(&self.gamma_mom) {
            return bad(format!(
                "momentum factor must lie in [0, 1), got {}",
                self.gamma_mom
            ));
        }
        if !(self.alpha_var >= 0.0) {
            return bad(format!(
                "variance gain must be non-negative, got {}",
                self.alpha_var
            ));
        }
        if !(self.forgetting_error_scale > 0.0) {
            return bad("forgetting error scale must be positive".into());
        }
        if !(self.variance_decay > 0.0 && self.variance_decay <= 1.0) {
            return bad(format!(
                "variance decay must lie in (0, 1], got {}",
                self.variance_decay
            ));
        }
        Ok(())
    }
}

/// Mutable learner memory: parameters `w`, the momentum/integral buffer `u`,
/// and the running mean and variance of the measured accelerations.
#[derive(Debug, Clone, PartialEq)]
pub struct LearnerState {
    pub w: DVector<f64>,
    pub u: DVector<f64>,
    pub v: JointVec,
    pub mean_acc: JointVec,
    pub tick: u64,
}

impl LearnerState {
    /// Zero offset: the controller starts as the plain model-based one.
    pub fn new(param_dim: usize, dof: usize) -> Self {
        LearnerState {
            w: DVector::zeros(param_dim),
            u: DVector::zeros(param_dim),
            v: JointVec::zeros(dof),
            mean_acc: JointVec::zeros(dof),
            tick: 0,
        }
    }

    pub fn for_model(model: &OffsetModel) -> Self {
        Self::new(model.param_dim(), model.dof())
    }
}

pub fn gd_step(
    params: &LearnerParams,
    lstate: &LearnerState,
    gradient: &DVector<f64>,
) -> LearnerState {
    let mut next = lstate.clone();
    next.w = &lstate.w * (1.0 - params.eta_lr * params.lambda_reg) - gradient * params.eta_lr;
    next
}

pub fn momentum_step(
    params: &LearnerParams,
    lstate: &LearnerState,
    gradient: &DVector<f64>,
) -> LearnerState {
    let g = params.gamma_mom;
    let mut next = lstate.clone();
    next.u = &lstate.u * g - gradient * (1.0 - g);
    next.w = &lstate.w * (1.0 - params.eta_lr * params.lambda_reg) + &next.u * params.eta_lr;
    next
}

/// Exponential-smoother form: `u` integrates the raw steps and `w` trails it.
/// The regularizer decays `u`, which `w` follows.
pub fn smoother_step(
    params: &LearnerParams,
    lstate: &LearnerState,
    gradient: &DVector<f64>,
) -> LearnerState {
    let g = params.gamma_mom;
    let mut next = lstate.clone();
    next.u = &lstate.u * (1.0 - params.eta_lr * params.lambda_reg) - gradient * params.eta_lr;
    next.w = &lstate.w * g + &next.u * (1.0 - g);
    next
}

fn apply_rule(
    params: &LearnerParams,
    lstate: &LearnerState,
    gradient: &DVector<f64>,
) -> LearnerState {
    match params.rule {
        UpdateRule::Gradient => gd_step(params, lstate, gradient),
        UpdateRule::Momentum => momentum_step(params, lstate, gradient),
        UpdateRule::Smoother => smoother_step(params, lstate, gradient),
    }
}

/// `(I + α diag(v))⁻¹ g`.
pub fn scale_by_variance(alpha: f64, v: &JointVec, gradient: &DVector<f64>) -> DVector<f64> {
    gradient.zip_map(v, |g, vi| g / (1.0 + alpha * vi))
}

/// Variance-scaled gradient fed through the configured update rule.
pub fn variance_scaled_step(
    params: &LearnerParams,
    lstate: &LearnerState,
    gradient: &DVector<f64>,
) -> Result<LearnerState> {
    check_dim("variance estimate", gradient.len(), lstate.v.len())?;
    let scaled = scale_by_variance(params.alpha_var, &lstate.v, gradient);
    Ok(apply_rule(params, lstate, &scaled))
}

/// Exponentially weighted mean and variance of the measured accelerations.
pub fn update_variance(lstate: &LearnerState, qdd_a: &JointVec, decay: f64) -> LearnerState {
    let mut next = lstate.clone();
    next.mean_acc = &lstate.mean_acc * decay + qdd_a * (1.0 - decay);
    let dev = qdd_a - &next.mean_acc;
    next.v = &lstate.v * decay + dev.component_mul(&dev) * (1.0 - decay);
    next
}

/// Regularizer from the size of the current acceleration error: zero error
/// means no forgetting, errors at or above the scale forget at `lambda_max`.
pub fn adaptive_lambda(params: &LearnerParams, accel_error: &JointVec) -> f64 {
    params.lambda_max * (accel_error.norm() / params.forgetting_error_scale).min(1.0)
}

/// One gradient step on `‖τ_applied − (M̂ q̈_a + ĥ + w)‖²` for the constant
/// offset model: the model is fit to the acceleration that actually
/// happened.
pub fn indirect_step(
    params: &LearnerParams,
    lstate: &LearnerState,
    model: &dyn ApproxModel,
    state: &State,
    qdd_a: &JointVec,
    tau_applied: &JointVec,
) -> Result<LearnerState> {
    check_dim("offset parameters", model.dof(), lstate.w.len())?;
    check_dim("applied torque", model.dof(), tau_applied.len())?;
    let predicted =
        model.mass_matrix(&state.q) * qdd_a + model.bias(&state.q, &state.qd) + &lstate.w;
    let residual = tau_applied - predicted;
    let mut next = lstate.clone();
    next.w = &lstate.w + residual * (2.0 * params.eta_lr);
    next.tick += 1;
    Ok(next)
}

/// One control cycle of the direct learner. Returns the new state and the
/// offset torque to apply next.
pub fn learner_tick(
    params: &LearnerParams,
    lstate: &LearnerState,
    model: &OffsetModel,
    q: &JointVec,
    qdd_d: &JointVec,
    qdd_a: &JointVec,
) -> Result<(LearnerState, JointVec)> {
    check_dim("learner parameters", model.param_dim(), lstate.w.len())?;
    let mut next = update_variance(lstate, qdd_a, params.variance_decay);
    let gradient = direct_gradient(model, q, qdd_d, qdd_a)?;

    let scaled = if gradient.len() == next.v.len() {
        scale_by_variance(params.alpha_var, &next.v, &gradient)
    } else if params.alpha_var == 0.0 {
        gradient
    } else {
        return Err(Error::InvalidParameter(
            "variance scaling needs one parameter per joint; use alpha_var = 0 with task-space offsets".into(),
        ));
    };

    let effective;
    let params = if params.adapt_forgetting {
        effective = LearnerParams {
            lambda_reg: adaptive_lambda(params, &(qdd_d - qdd_a)),
            ..params.clone()
        };
        &effective
    } else {
        params
    };

    next = apply_rule(params, &next, &scaled);
    next.tick += 1;
    let f = model.offset(q, &next.w)?;
    Ok((next, f))
}
