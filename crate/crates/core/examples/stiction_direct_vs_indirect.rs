//! A joint at rest behind a breakaway torque. The direct learner sees the
//! missing acceleration and pushes through; the indirect learner fits its
//! model to the zero acceleration it observes and never moves.
//!
//! ```text
//! cargo run --release --example stiction_direct_vs_indirect
//! ```

use doomed::harness::commands::describe_compare;
use doomed::harness::{compare_direct_indirect, ExperimentConfig};

fn main() -> doomed::Result<()> {
    let cfg = ExperimentConfig::stiction();
    let report = compare_direct_indirect(&cfg)?;
    print!("{}", describe_compare(&report));

    println!("\n   t      q(direct)  w(direct)  q(indirect)  w(indirect)");
    let (d, i) = (&report.direct.trace, &report.indirect.trace);
    for k in [0, 3, 6, 7, 8, 20, 100, 500, 1000, 3000, d.len() - 1] {
        println!(
            "{:>6.3}  {:>9.4}  {:>9.4}  {:>11.4}  {:>11.4}",
            d.rows[k].t, d.rows[k].q[0], d.rows[k].w[0], i.rows[k].q[0], i.rows[k].w[0]
        );
    }
    Ok(())
}
