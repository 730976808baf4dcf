//! The learner driven by hand, without the episode harness: a two-joint
//! double integrator with a constant unknown torque, a PD policy, and each
//! update rule in turn. Reports how quickly the offset cancels the
//! disturbance.
//!
//! ```text
//! cargo run --release --example update_rules
//! ```

use doomed::dynamics::{actual_acceleration, integrate_step, ConstantModel};
use doomed::learner::{learner_tick, LearnerParams, LearnerState, OffsetModel, UpdateRule};
use doomed::plants::DoubleIntegratorPlant;
use doomed::policies::{AccelPolicy, PdPointPolicy};
use doomed::{JointVec, State};

fn main() -> doomed::Result<()> {
    let d = JointVec::from_column_slice(&[3.0, -1.5]);
    let plant = DoubleIntegratorPlant::new(2, 2.0)?.with_disturbance(d.clone())?;
    let model = ConstantModel::scaled_identity(2, 2.0);
    let policy = PdPointPolicy::new(JointVec::from_column_slice(&[0.5, 0.5]), 25.0, 10.0)?;
    let offset = OffsetModel::constant(2);
    let dt = 0.002;

    let rules = [
        ("gradient", UpdateRule::Gradient, 0.0, 0.0),
        ("momentum", UpdateRule::Momentum, 0.9, 0.0),
        ("smoother", UpdateRule::Smoother, 0.9, 0.0),
        ("gradient, variance-scaled", UpdateRule::Gradient, 0.0, 1.0),
    ];
    println!("rule                        ticks to |w - d| < 1e-3   final w            final |q - target|");
    for (name, rule, gamma, alpha) in rules {
        let params = LearnerParams {
            eta_lr: 0.05,
            gamma_mom: gamma,
            alpha_var: alpha,
            rule,
            ..LearnerParams::default()
        };
        let mut ls = LearnerState::for_model(&offset);
        let mut f = JointVec::zeros(2);
        let mut s = State::at_rest(JointVec::zeros(2));
        let mut settled = None;
        for tick in 0..5000 {
            let qdd_d = policy.eval(s.t, &s);
            let qdd_a = actual_acceleration(&plant, &model, &s, &qdd_d, &f)?;
            let (next, f_next) = learner_tick(&params, &ls, &offset, &s.q, &qdd_d, &qdd_a)?;
            s = integrate_step(&s, &qdd_a, dt)?;
            ls = next;
            f = f_next;
            if settled.is_none() && (&ls.w - &d).amax() < 1e-3 {
                settled = Some(tick + 1);
            }
        }
        println!(
            "{name:<27} {:>25}   ({:>6.3}, {:>6.3})   {:.2e}",
            settled.map_or_else(|| "never".into(), |k| k.to_string()),
            ls.w[0],
            ls.w[1],
            (&s.q - &policy.target).amax()
        );
    }
    Ok(())
}
