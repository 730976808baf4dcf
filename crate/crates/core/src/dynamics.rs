//! Joint-space dynamics shared by plants, models and controllers.
//!
//! The true system obeys `M(q) q̈ = τ − h(q, q̇) − d(q, q̇)`, where `d` collects
//! unmodeled disturbance torques (friction fields, biases, damping). The
//! controller only ever sees an [`ApproxModel`] and computes
//! `τ = M̂(q) q̈_d + ĥ(q, q̇)`.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Joint-space vector: positions, velocities, accelerations or torques.
pub type JointVec = DVector<f64>;

/// Condition estimate above which a mass matrix is treated as singular.
pub const MAX_CONDITION: f64 = 1e12;

/// Joint positions and velocities at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub q: JointVec,
    pub qd: JointVec,
    pub t: f64,
}

impl State {
    pub fn new(q: JointVec, qd: JointVec, t: f64) -> Result<Self> {
        check_dim("state velocity", q.len(), qd.len())?;
        Ok(State { q, qd, t })
    }

    pub fn at_rest(q: JointVec) -> Self {
        let n = q.len();
        State {
            q,
            qd: JointVec::zeros(n),
            t: 0.0,
        }
    }

    pub fn dof(&self) -> usize {
        self.q.len()
    }
}

/// The true dynamics of a simulated system. Controllers never call this
/// directly; only the simulator and the loss oracle do.
pub trait Plant: Send + Sync {
    fn dof(&self) -> usize;

    fn mass_matrix(&self, q: &JointVec) -> DMatrix<f64>;

    fn bias(&self, _q: &JointVec, _qd: &JointVec) -> JointVec {
        JointVec::zeros(self.dof())
    }

    /// Unmodeled torques; subtracted from the applied torque.
    fn disturbance(&self, _q: &JointVec, _qd: &JointVec) -> JointVec {
        JointVec::zeros(self.dof())
    }

    /// `M⁻¹ (τ − h − d)`. Plants with non-smooth contact behaviour (stiction)
    /// override this.
    fn forward_dynamics(&self, state: &State, tau: &JointVec) -> Result<JointVec> {
        let m = self.mass_matrix(&state.q);
        let rhs = tau - self.bias(&state.q, &state.qd) - self.disturbance(&state.q, &state.qd);
        solve_spd(m, rhs)
    }
}

/// The controller's estimate of the dynamics, `M̂` and `ĥ`.
pub trait ApproxModel: Send + Sync {
    fn dof(&self) -> usize;

    fn mass_matrix(&self, q: &JointVec) -> DMatrix<f64>;

    fn bias(&self, _q: &JointVec, _qd: &JointVec) -> JointVec {
        JointVec::zeros(self.dof())
    }
}

/// A model with a configuration-independent mass matrix and bias.
#[derive(Debug, Clone)]
pub struct ConstantModel {
    pub mass: DMatrix<f64>,
    pub bias: JointVec,
}

impl ConstantModel {
    pub fn new(mass: DMatrix<f64>, bias: JointVec) -> Result<Self> {
        if mass.nrows() != mass.ncols() {
            return Err(Error::InvalidParameter(
                "model mass matrix must be square".into(),
            ));
        }
        check_dim("model bias", mass.nrows(), bias.len())?;
        Ok(ConstantModel { mass, bias })
    }

    /// `M̂ = scale · I`, `ĥ = 0`.
    pub fn scaled_identity(n: usize, scale: f64) -> Self {
        ConstantModel {
            mass: DMatrix::identity(n, n) * scale,
            bias: JointVec::zeros(n),
        }
    }

    pub fn diagonal(diag: &JointVec) -> Self {
        ConstantModel {
            mass: DMatrix::from_diagonal(diag),
            bias: JointVec::zeros(diag.len()),
        }
    }
}

impl ApproxModel for ConstantModel {
    fn dof(&self) -> usize {
        self.bias.len()
    }

    fn mass_matrix(&self, _q: &JointVec) -> DMatrix<f64> {
        self.mass.clone()
    }

    fn bias(&self, _q: &JointVec, _qd: &JointVec) -> JointVec {
        self.bias.clone()
    }
}

/// A model that knows the plant exactly, disturbances included.
#[derive(Clone)]
pub struct PerfectModel {
    plant: Arc<dyn Plant>,
}

impl PerfectModel {
    pub fn new(plant: Arc<dyn Plant>) -> Self {
        PerfectModel { plant }
    }
}

impl ApproxModel for PerfectModel {
    fn dof(&self) -> usize {
        self.plant.dof()
    }

    fn mass_matrix(&self, q: &JointVec) -> DMatrix<f64> {
        self.plant.mass_matrix(q)
    }

    fn bias(&self, q: &JointVec, qd: &JointVec) -> JointVec {
        self.plant.bias(q, qd) + self.plant.disturbance(q, qd)
    }
}

/// Fixed-step timing of a closed-loop run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub dt_sim: f64,
    pub dt_control: f64,
    pub duration: f64,
    pub seed: u64,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt_sim > 0.0 && self.dt_control > 0.0) {
            return Err(Error::InvalidParameter(
                "time steps must be positive".into(),
            ));
        }
        if !(self.duration >= 0.0) || !self.duration.is_finite() {
            return Err(Error::InvalidParameter(
                "duration must be finite and non-negative".into(),
            ));
        }
        let ratio = self.dt_control / self.dt_sim;
        if (ratio - ratio.round()).abs() > 1e-9 * ratio.max(1.0) || ratio.round() < 1.0 {
            return Err(Error::InvalidParameter(format!(
                "dt_control ({}) must be an integer multiple of dt_sim ({})",
                self.dt_control, self.dt_sim
            )));
        }
        Ok(())
    }

    /// Simulator steps per control tick.
    pub fn substeps(&self) -> usize {
        (self.dt_control / self.dt_sim).round() as usize
    }

    pub fn control_ticks(&self) -> usize {
        (self.duration / self.dt_control + 1e-9).floor() as usize
    }
}

pub(crate) fn check_dim(what: &'static str, expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch {
            what,
            expected,
            got,
        });
    }
    Ok(())
}

/// Solves `M x = rhs` for symmetric positive definite `M` via Cholesky.
///
/// The squared ratio of the extreme Cholesky pivots is a lower bound on the
/// spectral condition number and is what the singularity check uses.
pub fn solve_spd(m: DMatrix<f64>, rhs: JointVec) -> Result<JointVec> {
    check_dim("mass matrix", m.nrows(), rhs.len())?;
    let chol = m.cholesky().ok_or(Error::SingularMassMatrix {
        condition: f64::INFINITY,
    })?;
    let diag = chol.l_dirty().diagonal();
    let (lo, hi) = diag.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &d| {
        (lo.min(d.abs()), hi.max(d.abs()))
    });
    let condition = if lo > 0.0 {
        (hi / lo).powi(2)
    } else {
        f64::INFINITY
    };
    if !(condition <= MAX_CONDITION) {
        return Err(Error::SingularMassMatrix { condition });
    }
    let x = chol.solve(&rhs);
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("forward dynamics"));
    }
    Ok(x)
}

/// Acceleration of the true plant under torque `tau`.
pub fn forward_dynamics(plant: &dyn Plant, state: &State, tau: &JointVec) -> Result<JointVec> {
    check_dim("state", plant.dof(), state.dof())?;
    check_dim("torque", plant.dof(), tau.len())?;
    plant.forward_dynamics(state, tau)
}

/// `M̂(q) q̈_d + ĥ(q, q̇)`.
pub fn inverse_dynamics(
    model: &dyn ApproxModel,
    state: &State,
    qdd_d: &JointVec,
) -> Result<JointVec> {
    check_dim("state", model.dof(), state.dof())?;
    check_dim("desired acceleration", model.dof(), qdd_d.len())?;
    Ok(model.mass_matrix(&state.q) * qdd_d + model.bias(&state.q, &state.qd))
}

/// The acceleration the plant actually produces when the controller commands
/// `qdd_d` through its model plus an additive torque offset.
pub fn actual_acceleration(
    plant: &dyn Plant,
    model: &dyn ApproxModel,
    state: &State,
    qdd_d: &JointVec,
    f_offset: &JointVec,
) -> Result<JointVec> {
    check_dim("offset", plant.dof(), f_offset.len())?;
    let tau = inverse_dynamics(model, state, qdd_d)? + f_offset;
    forward_dynamics(plant, state, &tau)
}

/// Semi-implicit Euler: velocity first, then position with the new velocity.
pub fn integrate_step(state: &State, qdd: &JointVec, dt: f64) -> Result<State> {
    if !(dt > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "dt must be positive, got {dt}"
        )));
    }
    check_dim("acceleration", state.dof(), qdd.len())?;
    if qdd.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("acceleration"));
    }
    let qd = &state.qd + qdd * dt;
    let q = &state.q + &qd * dt;
    Ok(State {
        q,
        qd,
        t: state.t + dt,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    struct Spd {
        m: DMatrix<f64>,
        h: JointVec,
        d: JointVec,
    }

    impl Plant for Spd {
        fn dof(&self) -> usize {
            self.h.len()
        }
        fn mass_matrix(&self, _q: &JointVec) -> DMatrix<f64> {
            self.m.clone()
        }
        fn bias(&self, _q: &JointVec, _qd: &JointVec) -> JointVec {
            self.h.clone()
        }
        fn disturbance(&self, _q: &JointVec, _qd: &JointVec) -> JointVec {
            self.d.clone()
        }
    }

    fn spd3() -> Spd {
        let a = DMatrix::from_row_slice(3, 3, &[1.0, 0.2, -0.3, 0.5, 2.0, 0.1, 0.0, -0.4, 1.5]);
        Spd {
            m: &a * a.transpose() + DMatrix::identity(3, 3) * 0.1,
            h: JointVec::from_vec(vec![0.3, -1.2, 2.0]),
            d: JointVec::from_vec(vec![-0.7, 0.25, 1.0]),
        }
    }

    #[test]
    fn force_balance_gives_zero_acceleration() {
        let p = spd3();
        let s = State::at_rest(JointVec::zeros(3));
        let tau = &p.h + &p.d;
        let qdd = forward_dynamics(&p, &s, &tau).unwrap();
        assert!(qdd.amax() < 1e-12);
    }

    #[test]
    fn singular_mass_is_rejected() {
        let p = Spd {
            m: DMatrix::from_diagonal(&JointVec::from_vec(vec![1.0, 1e-14])),
            h: JointVec::zeros(2),
            d: JointVec::zeros(2),
        };
        let s = State::at_rest(JointVec::zeros(2));
        let err = forward_dynamics(&p, &s, &JointVec::from_vec(vec![1.0, 1.0])).unwrap_err();
        assert!(matches!(err, Error::SingularMassMatrix { .. }));

        let p = Spd {
            m: DMatrix::zeros(2, 2),
            ..p
        };
        assert!(forward_dynamics(&p, &s, &JointVec::zeros(2)).is_err());
    }

    #[test]
    fn inverse_dynamics_examples() {
        let s = State::at_rest(JointVec::zeros(2));
        let half = ConstantModel::scaled_identity(2, 0.5);
        let tau = inverse_dynamics(&half, &s, &JointVec::from_vec(vec![10.0, -4.0])).unwrap();
        assert_eq!(tau, JointVec::from_vec(vec![5.0, -2.0]));
        assert_eq!(
            inverse_dynamics(&half, &s, &JointVec::zeros(2)).unwrap(),
            JointVec::zeros(2)
        );

        let m = ConstantModel::new(
            DMatrix::from_diagonal(&JointVec::from_vec(vec![1.0, 2.0])),
            JointVec::from_vec(vec![0.5, 0.5]),
        )
        .unwrap();
        let tau = inverse_dynamics(&m, &s, &JointVec::from_vec(vec![1.0, 1.0])).unwrap();
        assert_eq!(tau, JointVec::from_vec(vec![1.5, 2.5]));

        assert!(matches!(
            inverse_dynamics(&m, &s, &JointVec::zeros(3)),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn actual_acceleration_matches_two_step_pipeline() {
        let p = spd3();
        let model = ConstantModel::new(
            DMatrix::from_diagonal(&JointVec::from_vec(vec![0.5, 0.7, 0.2])),
            JointVec::from_vec(vec![0.1, 0.0, -0.1]),
        )
        .unwrap();
        let s = State::new(
            JointVec::from_vec(vec![0.1, 0.2, 0.3]),
            JointVec::from_vec(vec![-1.0, 0.0, 1.0]),
            0.0,
        )
        .unwrap();
        let qdd_d = JointVec::from_vec(vec![3.0, -2.0, 0.5]);
        let off = JointVec::from_vec(vec![0.2, 0.4, -0.6]);

        let tau = model.mass * &qdd_d + &model.bias + &off;
        let rhs = &tau - &p.h - &p.d;
        let expected = p.m.clone().cholesky().unwrap().solve(&rhs);

        let got = actual_acceleration(&p, &model_again(), &s, &qdd_d, &off).unwrap();
        assert_eq!(got, expected);

        fn model_again() -> ConstantModel {
            ConstantModel::new(
                DMatrix::from_diagonal(&JointVec::from_vec(vec![0.5, 0.7, 0.2])),
                JointVec::from_vec(vec![0.1, 0.0, -0.1]),
            )
            .unwrap()
        }
    }

    #[test]
    fn perfect_model_superposition() {
        let p: Arc<dyn Plant> = Arc::new(Spd {
            d: JointVec::zeros(3),
            ..spd3()
        });
        let model = PerfectModel::new(p.clone());
        let s = State::at_rest(JointVec::zeros(3));
        let qdd_d = JointVec::from_vec(vec![1.0, -2.0, 0.5]);
        let zero = JointVec::zeros(3);
        let qdd_a = actual_acceleration(p.as_ref(), &model, &s, &qdd_d, &zero).unwrap();
        assert_relative_eq!(qdd_a, qdd_d, epsilon = 1e-10);

        let dtau = JointVec::from_vec(vec![0.3, 0.0, -0.2]);
        let qdd_a = actual_acceleration(p.as_ref(), &model, &s, &qdd_d, &dtau).unwrap();
        let shift = p.mass_matrix(&s.q).cholesky().unwrap().solve(&dtau);
        assert_relative_eq!(qdd_a, qdd_d + shift, epsilon = 1e-10);
    }

    #[test]
    fn integrate_step_examples() {
        let s = State::at_rest(JointVec::zeros(1));
        let s1 = integrate_step(&s, &JointVec::from_vec(vec![1.0]), 0.001).unwrap();
        assert_relative_eq!(s1.qd[0], 0.001);
        assert_relative_eq!(s1.q[0], 1e-6);
        assert_relative_eq!(s1.t, 0.001);

        let moving = State::new(
            JointVec::from_vec(vec![0.5]),
            JointVec::from_vec(vec![2.0]),
            0.0,
        )
        .unwrap();
        let s2 = integrate_step(&moving, &JointVec::zeros(1), 0.01).unwrap();
        assert_relative_eq!(s2.q[0], 0.52);
        assert_eq!(s2.qd[0], 2.0);

        assert!(integrate_step(&s, &JointVec::from_vec(vec![f64::NAN]), 0.001).is_err());
        assert!(integrate_step(&s, &JointVec::from_vec(vec![1.0]), 0.0).is_err());
    }

    #[test]
    fn constant_acceleration_matches_closed_form() {
        // Closed-form sum of the semi-implicit recurrence from rest:
        // qd_N = N g dt, q_N = g dt² N(N+1)/2.
        let g = 9.81;
        let dt = 1e-3;
        let n = 1000usize;
        let mut s = State::at_rest(JointVec::zeros(1));
        let acc = JointVec::from_vec(vec![g]);
        for _ in 0..n {
            s = integrate_step(&s, &acc, dt).unwrap();
        }
        let nf = n as f64;
        assert_relative_eq!(s.qd[0], g * nf * dt, max_relative = 1e-12);
        assert_relative_eq!(
            s.q[0],
            g * dt * dt * nf * (nf + 1.0) / 2.0,
            max_relative = 1e-12
        );
        assert_relative_eq!(s.q[0], g * (0.5 * 1.0 + 0.5 * dt), max_relative = 1e-12);
    }

    #[test]
    fn sim_config_validation() {
        let ok = SimConfig {
            dt_sim: 0.001,
            dt_control: 0.005,
            duration: 30.0,
            seed: 0,
        };
        ok.validate().unwrap();
        assert_eq!(ok.substeps(), 5);
        assert_eq!(ok.control_ticks(), 6000);
        let bad = SimConfig {
            dt_control: 0.0015,
            ..ok
        };
        assert!(bad.validate().is_err());
    }
}
