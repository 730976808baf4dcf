//! The planar system under a wrong mass model and a strong friction field.
//!
//! Runs the same PD reach three ways: with the online learner, without it,
//! and with a perfect model as the reference, then reports how far each run
//! strays from the reference.
//!
//! ```text
//! cargo run --release --example planar_friction [seeds]
//! ```

use doomed::harness::{rms_position_deviation, run_episode, ExperimentConfig, ModelSpec};

fn main() -> doomed::Result<()> {
    let seeds: u64 = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(5);

    println!("seed  rms(adaptive)  rms(fixed)  ratio   final q (adaptive)   final q (fixed)");
    for seed in 0..seeds {
        let mut adaptive = ExperimentConfig::planar();
        adaptive.sim.seed = seed;
        let mut fixed = adaptive.clone();
        fixed.learning_enabled = false;
        let mut reference = fixed.clone();
        reference.model = ModelSpec::Perfect;

        let a = run_episode(&adaptive)?;
        let f = run_episode(&fixed)?;
        let r = run_episode(&reference)?;
        let (ra, rf) = (rms_position_deviation(&a, &r), rms_position_deviation(&f, &r));
        let q = |t: &doomed::harness::EpisodeTrace| {
            format!("({:.4}, {:.4})", t.final_state.q[0], t.final_state.q[1])
        };
        println!(
            "{seed:>4}  {ra:>13.5}  {rf:>10.5}  {:.4}  {:>19}  {:>16}",
            ra / rf,
            q(&a),
            q(&f)
        );
    }
    Ok(())
}
