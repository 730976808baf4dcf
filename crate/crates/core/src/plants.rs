//! Concrete simulated systems and the mismatched models the controller uses
//! for them.

use nalgebra::{DMatrix, Vector2};

use crate::dynamics::{check_dim, ConstantModel, JointVec, Plant, State};
use crate::error::{Error, Result};

/// Kinetic friction as a fraction of the breakaway torque.
pub const KINETIC_FRACTION: f64 = 0.8;

/// Two-joint system with configuration-dependent inertia and a strong
/// spatially periodic friction field.
///
/// `M(q) = 5 (v vᵀ + 0.05 I)` with `v = (sin 5q₁, cos 2q₂)`, and the
/// disturbance `μ(q) = (100 sin 50q₁, 5 sin 50q₂)`.
#[derive(Debug, Clone, Copy, Default)]
pub struct PlanarSinusoidPlant;

impl PlanarSinusoidPlant {
    pub fn direction(q: &JointVec) -> Vector2<f64> {
        Vector2::new((5.0 * q[0]).sin(), (2.0 * q[1]).cos())
    }

    pub fn friction(q: &JointVec) -> JointVec {
        JointVec::from_vec(vec![100.0 * (50.0 * q[0]).sin(), 5.0 * (50.0 * q[1]).sin()])
    }
}

impl Plant for PlanarSinusoidPlant {
    fn dof(&self) -> usize {
        2
    }

    fn mass_matrix(&self, q: &JointVec) -> DMatrix<f64> {
        let v = Self::direction(q);
        let m = (v * v.transpose() + nalgebra::Matrix2::identity() * 0.05) * 5.0;
        DMatrix::from_iterator(2, 2, m.iter().copied())
    }

    fn disturbance(&self, q: &JointVec, _qd: &JointVec) -> JointVec {
        Self::friction(q)
    }
}

/// The planar plant and its badly scaled model `M̂ = 0.5 I`, `ĥ = 0`.
pub fn make_planar_pair() -> (PlanarSinusoidPlant, ConstantModel) {
    (PlanarSinusoidPlant, ConstantModel::scaled_identity(2, 0.5))
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Decoupled arm with diagonal inertia, viscous damping, a
/// velocity-direction-dependent friction term and a positional torque bias.
#[derive(Debug, Clone)]
pub struct BiasedArmPlant {
    inertia: JointVec,
    damping: JointVec,
}

impl BiasedArmPlant {
    pub fn new(inertia: JointVec, damping: JointVec) -> Result<Self> {
        if inertia.is_empty() {
            return Err(Error::InvalidParameter(
                "biased arm needs at least one joint".into(),
            ));
        }
        check_dim("damping", inertia.len(), damping.len())?;
        if inertia.iter().any(|&m| !(m > 0.0)) {
            return Err(Error::InvalidParameter(
                "inertia entries must be positive".into(),
            ));
        }
        if damping.iter().any(|&b| !(b >= 0.0)) {
            return Err(Error::InvalidParameter(
                "damping entries must be non-negative".into(),
            ));
        }
        Ok(BiasedArmPlant { inertia, damping })
    }

    pub fn inertia(&self) -> &JointVec {
        &self.inertia
    }

    pub fn damping(&self) -> &JointVec {
        &self.damping
    }

    pub fn friction_torque(q: f64, qd: f64) -> f64 {
        -7.0 * (5.0 * q).sin().powi(2) * (2.0 * sigmoid(qd) - 1.0)
    }

    pub fn bias_torque(q: f64) -> f64 {
        -5.0 * (5.0 * q).sin()
    }
}

impl Plant for BiasedArmPlant {
    fn dof(&self) -> usize {
        self.inertia.len()
    }

    fn mass_matrix(&self, _q: &JointVec) -> DMatrix<f64> {
        DMatrix::from_diagonal(&self.inertia)
    }

    fn disturbance(&self, q: &JointVec, qd: &JointVec) -> JointVec {
        JointVec::from_iterator(
            self.dof(),
            (0..self.dof()).map(|i| {
                Self::friction_torque(q[i], qd[i])
                    + Self::bias_torque(q[i])
                    + self.damping[i] * qd[i]
            }),
        )
    }
}

/// Biased arm plus a model that shares its inertia but knows nothing about
/// damping, friction or bias.
pub fn make_biased_arm_pair(
    n: usize,
    inertia: &JointVec,
    damping: &JointVec,
) -> Result<(BiasedArmPlant, ConstantModel)> {
    if n == 0 {
        return Err(Error::InvalidParameter(
            "biased arm needs at least one joint".into(),
        ));
    }
    check_dim("inertia", n, inertia.len())?;
    let plant = BiasedArmPlant::new(inertia.clone(), damping.clone())?;
    Ok((plant, ConstantModel::diagonal(inertia)))
}

/// One-joint mass with Coulomb stiction: below the breakaway torque a resting
/// joint does not move at all.
#[derive(Debug, Clone, Copy)]
pub struct StictionPlant {
    pub mass: f64,
    pub breakaway_torque: f64,
    pub velocity_epsilon: f64,
}

impl StictionPlant {
    pub fn kinetic_friction(&self) -> f64 {
        KINETIC_FRACTION * self.breakaway_torque
    }
}

pub fn make_stiction_plant(mass: f64, breakaway: f64, v_eps: f64) -> Result<StictionPlant> {
    if !(mass > 0.0) || !(breakaway >= 0.0) || !(v_eps > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "stiction plant needs mass > 0, breakaway >= 0, v_eps > 0 (got {mass}, {breakaway}, {v_eps})"
        )));
    }
    Ok(StictionPlant {
        mass,
        breakaway_torque: breakaway,
        velocity_epsilon: v_eps,
    })
}

impl Plant for StictionPlant {
    fn dof(&self) -> usize {
        1
    }

    fn mass_matrix(&self, _q: &JointVec) -> DMatrix<f64> {
        DMatrix::from_element(1, 1, self.mass)
    }

    fn forward_dynamics(&self, state: &State, tau: &JointVec) -> Result<JointVec> {
        let net = tau[0] - self.bias(&state.q, &state.qd)[0];
        let qd = state.qd[0];
        let acc = if qd.abs() < self.velocity_epsilon {
            if net.abs() <= self.breakaway_torque {
                0.0
            } else {
                (net - net.signum() * self.kinetic_friction()) / self.mass
            }
        } else {
            (net - qd.signum() * self.kinetic_friction()) / self.mass
        };
        Ok(JointVec::from_element(1, acc))
    }
}

/// `M = m I`, `h = 0`, plus an optional constant disturbance torque.
#[derive(Debug, Clone)]
pub struct DoubleIntegratorPlant {
    pub mass: f64,
    disturbance: JointVec,
}

impl DoubleIntegratorPlant {
    pub fn new(dof: usize, mass: f64) -> Result<Self> {
        if !(mass > 0.0) || dof == 0 {
            return Err(Error::InvalidParameter(
                "double integrator needs dof >= 1 and mass > 0".into(),
            ));
        }
        Ok(DoubleIntegratorPlant {
            mass,
            disturbance: JointVec::zeros(dof),
        })
    }

    pub fn with_disturbance(mut self, d: JointVec) -> Result<Self> {
        check_dim("disturbance", self.disturbance.len(), d.len())?;
        self.disturbance = d;
        Ok(self)
    }
}

impl Plant for DoubleIntegratorPlant {
    fn dof(&self) -> usize {
        self.disturbance.len()
    }

    fn mass_matrix(&self, _q: &JointVec) -> DMatrix<f64> {
        DMatrix::identity(self.dof(), self.dof()) * self.mass
    }

    fn disturbance(&self, _q: &JointVec, _qd: &JointVec) -> JointVec {
        self.disturbance.clone()
    }
}
