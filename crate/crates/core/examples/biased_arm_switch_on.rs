//! Seven-joint arm tracking chained regulators under sensor and torque noise.
//! The learner is switched on at 15 s; the smoothed acceleration error before
//! and after shows what it buys.
//!
//! ```text
//! cargo run --release --example biased_arm_switch_on [seed]
//! ```

use doomed::harness::{run_episode, windowed_smoothed_error, ExperimentConfig};

fn main() -> doomed::Result<()> {
    let mut cfg = ExperimentConfig::biased_arm();
    if let Some(seed) = std::env::args().nth(1).and_then(|s| s.parse().ok()) {
        cfg.sim.seed = seed;
    }
    let trace = run_episode(&cfg)?;
    if let Some(why) = &trace.failure {
        println!("run stopped early: {why}");
    }

    let before = windowed_smoothed_error(&trace, 5.0, 15.0);
    let after = windowed_smoothed_error(&trace, 20.0, 30.0);
    println!("joint  |e| 5-15 s  |e| 20-30 s  ratio   final offset");
    for j in 0..trace.dof {
        println!(
            "{j:>5}  {:>9.4}  {:>11.4}  {:.3}  {:>12.4}",
            before[j],
            after[j],
            after[j] / before[j],
            trace.final_w[j]
        );
    }

    // Offset magnitude once per regulator segment.
    print!("\nmean |offset| per segment:");
    let last = trace.rows.last().map_or(0, |r| r.segment);
    for s in 0..=last {
        let rows: Vec<_> = trace.rows.iter().filter(|r| r.segment == s).collect();
        let m = rows.iter().map(|r| r.f_offset.amax()).sum::<f64>() / rows.len() as f64;
        print!(" {m:.2}");
    }
    println!();
    Ok(())
}
