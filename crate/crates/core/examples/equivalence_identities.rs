//! Summed gradient steps on a PID-shaped objective collapse into a PID law,
//! and the simple online rule unrolls into a virtual-velocity controller.
//! Shows one hand-sized case of each, then the full randomized report.
//!
//! ```text
//! cargo run --release --example equivalence_identities [seed]
//! ```

use doomed::equivalence::{
    expand_online_vv, gd_pid_torque, recursive_tau, PidWeights, SignalLog, VelocityLog, VvParams,
};
use doomed::harness::verify::run_verification;
use doomed::JointVec;

fn main() -> doomed::Result<()> {
    let v = |x: f64| JointVec::from_element(1, x);

    // The plant falls short of a constant desired acceleration by 0.5.
    let steps = 200;
    let log = SignalLog::from_accelerations(
        0.01,
        &v(0.0),
        &v(0.0),
        vec![v(1.0); steps],
        vec![v(0.5); steps],
    )?;
    let w = PidWeights::new(1.0, 4.0, 2.0)?;
    let pid = gd_pid_torque(&w, &log, steps - 1)?;
    println!(
        "PID: summed steps {:.12}, collapsed law {:.12}",
        pid.summed[0], pid.collapsed[0]
    );

    let vlog = VelocityLog {
        dt: 0.01,
        qd_prior: v(0.0),
        qd: (1..=steps).map(|k| v((k as f64 * 0.05).sin())).collect(),
        qdd_d: vec![v(0.3); steps],
    };
    let p = VvParams::new(0.2, 0.95, vlog.dt)?;
    let taus = recursive_tau(&p, &vlog.qdd_d, &vlog.finite_difference_accels())?;
    let t = steps - 1;
    let e = expand_online_vv(&p, &vlog, t)?;
    println!(
        "virtual velocity: recursion {:.12}, expansion {:.12} (v = {:.6}, velocity gain {:.1})",
        taus[t + 1][0],
        e.tau[0],
        e.virtual_velocity[0],
        p.velocity_gain()
    );

    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0);
    println!("\n{}", run_verification(seed)?);
    Ok(())
}
