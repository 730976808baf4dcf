use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::dynamics::{actual_acceleration, check_dim, ApproxModel, JointVec, Plant, State};
use crate::error::{Error, Result};

type JacobianFn = dyn Fn(&JointVec) -> DMatrix<f64> + Send + Sync;

/// A task map `x = φ(q)` known only through its Jacobian `J(q)` (`m × n`).
#[derive(Clone)]
pub struct TaskMap {
    dim: usize,
    jacobian: Arc<JacobianFn>,
}

impl TaskMap {
    pub fn new(
        dim: usize,
        jacobian: impl Fn(&JointVec) -> DMatrix<f64> + Send + Sync + 'static,
    ) -> Self {
        TaskMap {
            dim,
            jacobian: Arc::new(jacobian),
        }
    }

    pub fn constant(j: DMatrix<f64>) -> Self {
        let dim = j.nrows();
        TaskMap::new(dim, move |_| j.clone())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn jacobian(&self, q: &JointVec) -> DMatrix<f64> {
        (self.jacobian)(q)
    }
}

impl fmt::Debug for TaskMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TaskMap")
            .field("dim", &self.dim)
            .finish_non_exhaustive()
    }
}

/// Parameterized torque correction added on top of the model's inverse
/// dynamics.
#[derive(Debug, Clone)]
pub enum OffsetModel {
    /// `f_offset(w) = w`, Jacobian `I`.
    Constant { dof: usize },
    /// `f_offset = Σᵢ Jᵢᵀ λᵢ` with the task-space forces `λᵢ` stacked in `w`.
    TaskStacked { dof: usize, maps: Vec<TaskMap> },
}

impl OffsetModel {
    pub fn constant(dof: usize) -> Self {
        OffsetModel::Constant { dof }
    }

    pub fn task_stacked(dof: usize, maps: Vec<TaskMap>) -> Result<Self> {
        if maps.is_empty() {
            return Err(Error::InvalidParameter(
                "task-stacked offset needs at least one task map".into(),
            ));
        }
        Ok(OffsetModel::TaskStacked { dof, maps })
    }

    pub fn dof(&self) -> usize {
        match self {
            OffsetModel::Constant { dof } | OffsetModel::TaskStacked { dof, .. } => *dof,
        }
    }

    /// Length of the parameter vector `w`.
    pub fn param_dim(&self) -> usize {
        match self {
            OffsetModel::Constant { dof } => *dof,
            OffsetModel::TaskStacked { maps, .. } => maps.iter().map(TaskMap::dim).sum(),
        }
    }

    /// `J_f = ∂f_offset/∂w`, an `n × p` matrix.
    pub fn jacobian(&self, q: &JointVec) -> DMatrix<f64> {
        match self {
            OffsetModel::Constant { dof } => DMatrix::identity(*dof, *dof),
            OffsetModel::TaskStacked { dof, maps } => {
                let mut jf = DMatrix::zeros(*dof, self.param_dim());
                let mut col = 0;
                for map in maps {
                    let j = map.jacobian(q);
                    jf.columns_mut(col, map.dim()).copy_from(&j.transpose());
                    col += map.dim();
                }
                jf
            }
        }
    }

    pub fn offset(&self, q: &JointVec, w: &DVector<f64>) -> Result<JointVec> {
        check_dim("offset parameters", self.param_dim(), w.len())?;
        Ok(match self {
            OffsetModel::Constant { .. } => w.clone(),
            OffsetModel::TaskStacked { .. } => self.jacobian(q) * w,
        })
    }
}

/// `∇_w l = −J_fᵀ (q̈_d − q̈_a)`: the acceleration error, measured in the
/// offset's parameter space. Needs no knowledge of the true dynamics.
pub fn direct_gradient(
    model: &OffsetModel,
    q: &JointVec,
    qdd_d: &JointVec,
    qdd_a: &JointVec,
) -> Result<DVector<f64>> {
    check_dim("desired acceleration", model.dof(), qdd_d.len())?;
    check_dim("actual acceleration", model.dof(), qdd_a.len())?;
    let err = qdd_d - qdd_a;
    Ok(match model {
        OffsetModel::Constant { .. } => -err,
        OffsetModel::TaskStacked { .. } => -(model.jacobian(q).transpose() * err),
    })
}

/// `½ ‖q̈_d − q̈_a(w)‖²_M` under the true mass matrix. Only computable in
/// simulation.
pub fn loss_oracle(
    plant: &dyn Plant,
    model: &dyn ApproxModel,
    state: &State,
    qdd_d: &JointVec,
    offset: &OffsetModel,
    w: &DVector<f64>,
) -> Result<f64> {
    let f = offset.offset(&state.q, w)?;
    let qdd_a = actual_acceleration(plant, model, state, qdd_d, &f)?;
    let e = qdd_d - qdd_a;
    let m = plant.mass_matrix(&state.q);
    Ok(0.5 * e.dot(&(m * &e)))
}
