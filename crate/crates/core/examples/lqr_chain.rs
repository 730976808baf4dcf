//! Chained finite-horizon regulators on a two-joint double integrator. Each
//! segment drives the joints to its waypoint; the rollout uses the exact
//! model, so the tracking is limited only by the regulator weights.
//!
//! ```text
//! cargo run --release --example lqr_chain
//! ```

use doomed::dynamics::{actual_acceleration, integrate_step, ConstantModel};
use doomed::plants::DoubleIntegratorPlant;
use doomed::policies::{lqr_chain, lqr_steady_state_gain, AccelPolicy};
use doomed::{JointVec, State};

fn main() -> doomed::Result<()> {
    let dt = 0.005;
    let goals: Vec<JointVec> = [[0.5, -0.3], [-0.8, 0.6], [0.2, 0.9], [0.0, 0.0]]
        .iter()
        .map(|g| JointVec::from_column_slice(g))
        .collect();
    let policy = lqr_chain(&goals, 100.0, 10.0, 1.0, 2.0, dt)?;

    let k = lqr_steady_state_gain(100.0, 10.0, 1.0, dt)?;
    println!("steady-state gain: k_pos {:.4}, k_vel {:.4}", k[0], k[1]);
    println!("segment starts: {:?}", policy.starts());

    let plant = DoubleIntegratorPlant::new(2, 1.0)?;
    let model = ConstantModel::scaled_identity(2, 1.0);
    let zero = JointVec::zeros(2);
    let mut s = State::at_rest(zero.clone());
    let steps = (policy.total_duration() / dt).round() as usize;

    println!("\nseg  goal              q at segment end      |qd|");
    for step in 0..steps {
        let qdd_d = policy.eval(s.t, &s);
        let qdd = actual_acceleration(&plant, &model, &s, &qdd_d, &zero)?;
        let seg = policy.segment(s.t);
        s = integrate_step(&s, &qdd, dt)?;
        if step + 1 == steps || policy.segment(s.t) != seg {
            let g = &goals[seg];
            println!(
                "{seg:>3}  ({:>5.2}, {:>5.2})    ({:>8.5}, {:>8.5})    {:.2e}",
                g[0],
                g[1],
                s.q[0],
                s.q[1],
                s.qd.norm()
            );
        }
    }
    Ok(())
}
