//! The direct gradient needs only the measured acceleration. This compares
//! it with a central finite difference of the true loss, which needs the
//! plant's mass matrix, for a few random planar states.
//!
//! ```text
//! cargo run --release --example gradient_check
//! ```

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use doomed::dynamics::actual_acceleration;
use doomed::learner::{direct_gradient, loss_oracle, OffsetModel};
use doomed::plants::make_planar_pair;
use doomed::{JointVec, State};

fn main() -> doomed::Result<()> {
    let (plant, model) = make_planar_pair();
    let offset = OffsetModel::constant(2);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut draw = |s: f64| JointVec::from_fn(2, |_, _| rng.gen_range(-s..s));
    let h = 1e-6;

    println!("      measured gradient            finite difference        rel. error");
    for _ in 0..6 {
        let state = State::new(draw(2.0), draw(2.0), 0.0)?;
        let qdd_d = draw(10.0);
        let w: DVector<f64> = draw(5.0);

        let f = offset.offset(&state.q, &w)?;
        let qdd_a = actual_acceleration(&plant, &model, &state, &qdd_d, &f)?;
        let g = direct_gradient(&offset, &state.q, &qdd_d, &qdd_a)?;

        let mut fd = DVector::zeros(2);
        for i in 0..2 {
            let mut wp = w.clone();
            let mut wm = w.clone();
            wp[i] += h;
            wm[i] -= h;
            let lp = loss_oracle(&plant, &model, &state, &qdd_d, &offset, &wp)?;
            let lm = loss_oracle(&plant, &model, &state, &qdd_d, &offset, &wm)?;
            fd[i] = (lp - lm) / (2.0 * h);
        }
        let rel = (&g - &fd).amax() / g.amax().max(fd.amax());
        println!(
            "({:>11.5}, {:>11.5})   ({:>11.5}, {:>11.5})   {rel:.1e}",
            g[0], g[1], fd[0], fd[1]
        );
    }
    Ok(())
}
