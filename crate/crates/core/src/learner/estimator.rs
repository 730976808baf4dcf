use crate::dynamics::JointVec;
use crate::error::{Error, Result};

/// Finite-difference acceleration estimate from successive velocity
/// readings, optionally exponentially smoothed.
#[derive(Debug, Clone)]
pub struct AccelEstimator {
    dt: f64,
    smoothing: f64,
    prev_qd: Option<JointVec>,
    smoothed: Option<JointVec>,
}

/// Output of one estimator update. The first update only primes the
/// velocity buffer and is reported as invalid.
#[derive(Debug, Clone, PartialEq)]
pub struct AccelEstimate {
    pub value: JointVec,
    pub valid: bool,
}

impl AccelEstimator {
    pub fn new(dt: f64, smoothing: f64) -> Result<Self> {
        if !(dt > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "estimator dt must be positive, got {dt}"
            )));
        }
        if !(0.0..1.0).contains(&smoothing) {
            return Err(Error::InvalidParameter(format!(
                "smoothing must lie in [0, 1), got {smoothing}"
            )));
        }
        Ok(AccelEstimator {
            dt,
            smoothing,
            prev_qd: None,
            smoothed: None,
        })
    }

    /// Starts the estimator from a known prior velocity.
    pub fn primed(dt: f64, smoothing: f64, prev_qd: JointVec) -> Result<Self> {
        let mut est = Self::new(dt, smoothing)?;
        est.prev_qd = Some(prev_qd);
        Ok(est)
    }

    pub fn update(&mut self, qd_now: &JointVec) -> AccelEstimate {
        let Some(prev) = self.prev_qd.replace(qd_now.clone()) else {
            return AccelEstimate {
                value: JointVec::zeros(qd_now.len()),
                valid: false,
            };
        };
        let raw = (qd_now - prev) / self.dt;
        let value = match self.smoothed.take() {
            Some(s) => s * self.smoothing + raw * (1.0 - self.smoothing),
            None => raw,
        };
        self.smoothed = Some(value.clone());
        AccelEstimate { value, valid: true }
    }
}

pub fn estimate_accel(est: &mut AccelEstimator, qd_now: &JointVec) -> AccelEstimate {
    est.update(qd_now)
}
