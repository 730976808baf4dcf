//! Numerical checks of the PID and virtual-velocity identities on random
//! logs, summarised as a pass/fail report.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dynamics::JointVec;
use crate::equivalence::{
    classical_vv_tau, expand_classical_vv, expand_online_vv, gd_pid_torque, recursive_tau,
    PidWeights, SignalLog, VelocityLog, VvParams,
};
use crate::error::Result;

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub cases: usize,
    pub max_residual: f64,
    pub tolerance: f64,
}

impl CheckResult {
    pub fn passed(&self) -> bool {
        self.max_residual <= self.tolerance
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyReport {
    pub seed: u64,
    pub checks: Vec<CheckResult>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(CheckResult::passed)
    }
}

impl fmt::Display for VerifyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "equivalence checks (seed {})", self.seed)?;
        for c in &self.checks {
            writeln!(
                f,
                "{:<4} {:<40} max residual {:.3e}  tol {:.1e}  cases {}",
                if c.passed() { "PASS" } else { "FAIL" },
                c.name,
                c.max_residual,
                c.tolerance,
                c.cases
            )?;
        }
        write!(
            f,
            "overall: {}",
            if self.passed() { "PASS" } else { "FAIL" }
        )
    }
}

/// Normwise relative error over a whole sequence:
/// `max_t ‖a_t − b_t‖∞ / max_t max(‖a_t‖∞, ‖b_t‖∞)`. Unlike a per-step ratio it
/// does not blow up where the signal happens to cross zero.
#[derive(Debug, Default)]
struct Normwise {
    err: f64,
    scale: f64,
}

impl Normwise {
    fn push(&mut self, a: &JointVec, b: &JointVec) {
        self.err = self.err.max((a - b).amax());
        self.scale = self.scale.max(a.amax()).max(b.amax());
    }

    fn value(&self) -> f64 {
        if self.scale == 0.0 {
            0.0
        } else {
            self.err / self.scale
        }
    }
}

fn uniform_vec(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> JointVec {
    JointVec::from_fn(n, |_, _| rng.gen_range(-scale..=scale))
}

/// Random desired/actual accelerations rolled out from a shared start.
pub fn random_signal_log(rng: &mut ChaCha8Rng, dof: usize, len: usize) -> Result<SignalLog> {
    let dt = rng.gen_range(1e-3..1e-2);
    let q0 = uniform_vec(rng, dof, 1.0);
    let qd0 = uniform_vec(rng, dof, 1.0);
    let qdd_d = (0..len).map(|_| uniform_vec(rng, dof, 5.0)).collect();
    let qdd_a = (0..len).map(|_| uniform_vec(rng, dof, 5.0)).collect();
    SignalLog::from_accelerations(dt, &q0, &qd0, qdd_d, qdd_a)
}

/// Random velocity readings and desired accelerations.
pub fn random_velocity_log(rng: &mut ChaCha8Rng, dof: usize, len: usize) -> VelocityLog {
    VelocityLog {
        dt: rng.gen_range(1e-3..1e-2),
        qd_prior: uniform_vec(rng, dof, 1.0),
        qd: (0..len).map(|_| uniform_vec(rng, dof, 1.0)).collect(),
        qdd_d: (0..len).map(|_| uniform_vec(rng, dof, 5.0)).collect(),
    }
}

fn random_pid_weights(rng: &mut ChaCha8Rng) -> Result<PidWeights> {
    PidWeights::new(
        rng.gen_range(0.1..10.0),
        rng.gen_range(0.1..10.0),
        rng.gen_range(0.1..10.0),
    )
}

/// Summed gradient steps against the collapsed PID law.
pub fn check_pid_identity(rng: &mut ChaCha8Rng, logs: usize, len: usize) -> Result<CheckResult> {
    let mut worst = 0.0f64;
    for _ in 0..logs {
        let dof = rng.gen_range(1..=4);
        let log = random_signal_log(rng, dof, len)?;
        let w = random_pid_weights(rng)?;
        let mut ts: Vec<usize> = (0..8).map(|_| rng.gen_range(1..len)).collect();
        ts.push(len - 1);
        let mut err = Normwise::default();
        for t in ts {
            let tau = gd_pid_torque(&w, &log, t)?;
            err.push(&tau.summed, &tau.collapsed);
        }
        worst = worst.max(err.value());
    }
    Ok(CheckResult {
        name: "pid identity (summed vs collapsed)",
        cases: logs,
        max_residual: worst,
        tolerance: 1e-10,
    })
}

/// Recursion vs. unrolled online sum, classical recursion vs. its sum, and
/// the one-step velocity shift that maps one onto the other.
pub fn check_telescoping(
    rng: &mut ChaCha8Rng,
    logs: usize,
    len: usize,
) -> Result<[CheckResult; 3]> {
    let (mut online, mut classical, mut shift) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..logs {
        let dof = rng.gen_range(1..=4);
        let log = random_velocity_log(rng, dof, len);
        let p = VvParams::new(rng.gen_range(0.01..1.0), rng.gen_range(0.5..=1.0), log.dt)?;
        let taus = recursive_tau(&p, &log.qdd_d, &log.finite_difference_accels())?;
        let v0 = uniform_vec(rng, dof, 1.0);
        let (classical_vs, _) = classical_vv_tau(&p, &log, &v0);
        let delayed = log.delayed();
        let (mut on_err, mut cl_err, mut sh_err) = (
            Normwise::default(),
            Normwise::default(),
            Normwise::default(),
        );
        for t in 0..len {
            let on = expand_online_vv(&p, &log, t)?;
            on_err.push(&taus[t + 1], &on.tau);

            // Compared on v: τ = α(v − q̇) only adds a cancelling subtraction.
            let cl = expand_classical_vv(&p, &log, t, &v0)?;
            cl_err.push(&classical_vs[t], &cl.virtual_velocity);

            let shifted = expand_classical_vv(&p, &delayed, t, &log.qd_prior)?;
            sh_err.push(
                &(&on.virtual_velocity + &on.boundary),
                &shifted.virtual_velocity,
            );
        }
        online = online.max(on_err.value());
        classical = classical.max(cl_err.value());
        shift = shift.max(sh_err.value());
    }
    Ok([
        CheckResult {
            name: "online recursion vs expansion",
            cases: logs,
            max_residual: online,
            tolerance: 1e-9,
        },
        CheckResult {
            name: "classical recursion vs expansion (v)",
            cases: logs,
            max_residual: classical,
            tolerance: 1e-12,
        },
        CheckResult {
            name: "one-step velocity index shift",
            cases: logs,
            max_residual: shift,
            tolerance: 1e-12,
        },
    ])
}

/// Standard deviation of the torque perturbation caused by white velocity
/// noise of standard deviation `sigma`, on a long random log.
pub fn noise_output_std(
    rng: &mut ChaCha8Rng,
    params: &VvParams,
    log: &VelocityLog,
    sigma: f64,
) -> Result<f64> {
    let clean = recursive_tau(params, &log.qdd_d, &log.finite_difference_accels())?;
    // Gaussian-free white noise with the requested standard deviation.
    let half_width = sigma * 3f64.sqrt();
    let mut noisy_log = log.clone();
    noisy_log.qd_prior += uniform_vec(rng, log.qd_prior.len(), half_width);
    for v in &mut noisy_log.qd {
        *v += uniform_vec(rng, v.len(), half_width);
    }
    let noisy = recursive_tau(
        params,
        &noisy_log.qdd_d,
        &noisy_log.finite_difference_accels(),
    )?;
    let burn_in = noisy.len() / 10;
    let diffs: Vec<f64> = clean[burn_in..]
        .iter()
        .zip(&noisy[burn_in..])
        .flat_map(|(c, n)| (n - c).iter().copied().collect::<Vec<_>>())
        .collect();
    let mean = diffs.iter().sum::<f64>() / diffs.len() as f64;
    let var = diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / diffs.len() as f64;
    Ok(var.sqrt())
}

/// Least-squares slope through the origin of output std against noise std,
/// compared with twice the equivalent velocity gain `α/Δt`.
pub fn check_noise_slope(rng: &mut ChaCha8Rng, len: usize) -> Result<CheckResult> {
    let log = random_velocity_log(rng, 1, len);
    let p = VvParams::new(0.1, 0.9, log.dt)?;
    let sigmas = [1e-4, 1e-3, 1e-2];
    let mut num = 0.0;
    let mut den = 0.0;
    for s in sigmas {
        let std = noise_output_std(rng, &p, &log, s)?;
        num += s * std;
        den += s * s;
    }
    let slope = num / den;
    Ok(CheckResult {
        name: "noise slope / (2 alpha/dt)",
        cases: sigmas.len(),
        max_residual: slope / (2.0 * p.velocity_gain()),
        tolerance: 1.0,
    })
}

/// Runs every identity check from one seed.
pub fn run_verification(seed: u64) -> Result<VerifyReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut checks = vec![check_pid_identity(&mut rng, 100, 1000)?];
    checks.extend(check_telescoping(&mut rng, 100, 200)?);
    checks.push(check_noise_slope(&mut rng, 20_000)?);
    Ok(VerifyReport { seed, checks })
}
