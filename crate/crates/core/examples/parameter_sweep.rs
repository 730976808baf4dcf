//! Crosses learning rate, variance gain and momentum on the desk-scale
//! planar setup, writes the long-format metrics file and lists the best grid
//! points per segment.
//!
//! ```text
//! cargo run --release --example parameter_sweep [out_dir]
//! ```

use std::path::PathBuf;

use doomed::harness::commands;
use doomed::harness::{ExperimentConfig, SweepGrid};

fn main() -> doomed::Result<()> {
    let out: PathBuf = std::env::args()
        .nth(1)
        .map_or_else(|| std::env::temp_dir().join("doomed_sweep"), PathBuf::from);
    let cfg = ExperimentConfig::sweep_desk();
    let grid = SweepGrid::default();
    let (rows, path) = commands::sweep(&cfg, &grid, &out)?;
    println!(
        "{} grid points x {} trials -> {} rows in {}",
        grid.len(),
        cfg.trials,
        rows.len(),
        path.display()
    );

    for seg in 0..2 {
        let mut ok: Vec<_> = rows
            .iter()
            .filter(|r| r.segment == Some(seg) && r.success)
            .collect();
        let score = |r: &&doomed::harness::MetricsRow| r.mean_abs_accel_error.iter().sum::<f64>();
        ok.sort_by(|a, b| score(a).total_cmp(&score(b)));
        println!("\nsegment {seg}: {} safe points, best five by summed mean |accel error|", ok.len());
        println!("   eta  alpha  gamma   |e| joint 0  |e| joint 1  |offset| 0  |offset| 1");
        for r in ok.iter().take(5) {
            let p = r.point.expect("sweep rows carry their grid point");
            println!(
                "{:>6.2}  {:>5.1}  {:>5.2}  {:>11.4}  {:>11.4}  {:>10.3}  {:>10.3}",
                p.eta,
                p.alpha,
                p.gamma,
                r.mean_abs_accel_error[0],
                r.mean_abs_accel_error[1],
                r.mean_abs_offset[0],
                r.mean_abs_offset[1]
            );
        }
    }
    Ok(())
}
