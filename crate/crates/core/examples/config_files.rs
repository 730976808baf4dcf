//! Experiment configs as text: start from a preset, override a few keys,
//! print the canonical form, and run it.
//!
//! ```text
//! cargo run --example config_files [preset]
//! ```

use doomed::harness::{compute_metrics, run_episode, ExperimentConfig};

fn main() -> doomed::Result<()> {
    let preset = std::env::args().nth(1).unwrap_or_else(|| "planar".into());
    let text = format!(
        "# any preset, then overrides\n\
         preset = {preset}\n\
         sim.seed = 3\n"
    );
    let mut cfg = ExperimentConfig::parse(&text)?;
    cfg.set("trials", "1")?;

    let canonical = cfg.to_config_string();
    println!("{canonical}");
    assert_eq!(ExperimentConfig::parse(&canonical)?, cfg);

    let trace = run_episode(&cfg)?;
    let m = compute_metrics(&trace)?;
    println!(
        "{} ticks, success {}, mean |accel error| per joint {:.4?}",
        trace.len(),
        trace.success,
        m.mean_abs_accel_error
    );
    Ok(())
}
