//! Direct online optimization of inverse-dynamics modeling errors.
//!
//! A controller commands desired accelerations through an approximate
//! inverse-dynamics model plus a learned torque offset. The offset is trained
//! online by gradient descent on the acceleration tracking error, whose
//! gradient needs only the measured acceleration and the offset's Jacobian.
//!
//! Modules:
//!
//! * [`dynamics`]: joint-space types, forward/inverse dynamics, integration.
//! * [`plants`]: the simulated systems and their mismatched models.
//! * [`policies`]: PD and chained finite-horizon LQR acceleration policies.
//! * [`learner`]: direct and indirect offset learners and update rules.
//! * [`equivalence`]: the PID and virtual-velocity identities.
//! * [`harness`]: closed-loop episodes, metrics, sweeps, configs and CSV.

pub mod dynamics;
pub mod equivalence;
pub mod error;
pub mod harness;
pub mod learner;
pub mod plants;
pub mod policies;

pub use dynamics::{JointVec, State};
pub use error::{Error, Result};
