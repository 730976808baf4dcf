//! Acceptance run: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails. Built with `harness = false` so the lines always show.

mod common;

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use doomed::harness::output::{emit_metrics_csv, read_metrics_csv};
use doomed::harness::sweep::SweepGrid;
use doomed::harness::verify::{check_pid_identity, check_telescoping};
use doomed::harness::{
    compare_direct_indirect, rms_position_deviation, run_episode, run_sweep,
    windowed_smoothed_error, ExperimentConfig, ModelSpec,
};
use doomed::plants::{BiasedArmPlant, PlanarSinusoidPlant, StictionPlant};
use doomed::{JointVec, State};

use common::*;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

fn gradient_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let cases = 300;
    let mut worst = (0.0f64, "");
    for i in 0..cases {
        let case = gradient_case(&mut rng, i);
        let err = gradient_relative_error(&case, 1e-6);
        if !(err <= worst.0) {
            worst = (err, case.label);
        }
    }
    outcome(
        worst.0 <= 1e-5,
        format!(
            "{cases} cases on 3 plants, worst relative error {:.2e} ({}), tol 1e-5",
            worst.0, worst.1
        ),
    )
}

fn pid_identity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let c = check_pid_identity(&mut rng, 100, 1000).expect("pid check runs");
    outcome(
        c.passed() && c.tolerance <= 1e-10,
        format!(
            "{} logs of 1000 steps, max relative residual {:.2e}, tol {:.0e}",
            c.cases, c.max_residual, c.tolerance
        ),
    )
}

fn telescoping() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let checks = check_telescoping(&mut rng, 100, 200).expect("telescoping check runs");
    let tolerances_ok = checks[0].tolerance <= 1e-9
        && checks[1].tolerance <= 1e-12
        && checks[2].tolerance <= 1e-12;
    let detail = checks
        .iter()
        .map(|c| format!("{} {:.2e}/{:.0e}", c.name, c.max_residual, c.tolerance))
        .collect::<Vec<_>>()
        .join("; ");
    outcome(checks.iter().all(|c| c.passed()) && tolerances_ok, detail)
}

fn planar_reproduction() -> Outcome {
    let mut worst_ratio = 0.0f64;
    let mut worst_final = 0.0f64;
    let mut failures = Vec::new();
    for seed in 0..10 {
        let mut adaptive = ExperimentConfig::planar();
        adaptive.sim.seed = seed;
        let mut fixed = adaptive.clone();
        fixed.learning_enabled = false;
        let mut reference = fixed.clone();
        reference.model = ModelSpec::Perfect;

        let a = run_episode(&adaptive).expect("adaptive run");
        let f = run_episode(&fixed).expect("non-adaptive run");
        let r = run_episode(&reference).expect("reference run");
        if !a.success {
            failures.push(seed);
            continue;
        }
        let ratio = rms_position_deviation(&a, &r) / rms_position_deviation(&f, &r);
        let final_err = a.final_state.q.add_scalar(-1.0).amax();
        worst_ratio = worst_ratio.max(ratio);
        worst_final = worst_final.max(final_err);
    }
    outcome(
        failures.is_empty() && worst_ratio <= 0.2 && worst_final < 1e-2,
        format!(
            "10 seeds, worst RMS ratio {worst_ratio:.4} (tol 0.2), worst final |q - (1,1)| {worst_final:.2e} (tol 1e-2), unsafe seeds {failures:?}"
        ),
    )
}

fn switch_on() -> Outcome {
    let mut worst = 0.0f64;
    let mut failures = Vec::new();
    for seed in 0..5 {
        let mut c = ExperimentConfig::biased_arm();
        c.sim.seed = seed;
        let trace = run_episode(&c).expect("biased arm run");
        if !trace.success {
            failures.push(seed);
            continue;
        }
        let before = windowed_smoothed_error(&trace, 5.0, 15.0);
        let after = windowed_smoothed_error(&trace, 20.0, 30.0);
        for (b, a) in before.iter().zip(&after) {
            worst = worst.max(a / b);
        }
    }
    outcome(
        failures.is_empty() && worst <= 0.2,
        format!(
            "5 seeds x 7 joints, worst after/before smoothed |error| ratio {worst:.3} (tol 0.2), unsafe seeds {failures:?}"
        ),
    )
}

fn stiction_separation() -> Outcome {
    let cfg = ExperimentConfig::stiction();
    let r = compare_direct_indirect(&cfg).expect("stiction comparison");
    let d = &r.direct;
    let i = &r.indirect;
    let horizon_ok = cfg.sim.duration <= 10.0;
    let direct_ok = d.breakaway_tick.is_some() && d.final_position_error < 0.05;

    // After the freeze tick the torque residual and every update are exactly 0.
    let frozen_ok = match i.w_frozen_from {
        Some(k) => {
            i.trace.rows[k..].iter().all(|row| row.tau_applied[0] - row.w[0] == 0.0)
                && i.w[k..].windows(2).all(|p| p[1] == p[0])
        }
        None => false,
    };
    let indirect_ok = i.position_change < 1e-6 && frozen_ok;
    outcome(
        horizon_ok && direct_ok && indirect_ok,
        format!(
            "direct breakaway tick {:?}, final |q - target| {:.4} (tol 0.05); indirect position change {:.1e} (tol 1e-6), w frozen from tick {:?}",
            d.breakaway_tick, d.final_position_error, i.position_change, i.w_frozen_from
        ),
    )
}

fn sweep_harness() -> Outcome {
    let base = ExperimentConfig::sweep_desk();
    let grid = SweepGrid::default();
    let first = run_sweep(&base, &grid).expect("sweep");
    let second = run_sweep(&base, &grid).expect("repeat sweep");

    let segments = 2;
    let per_segment_ok = (0..segments)
        .all(|s| first.iter().filter(|r| r.segment == Some(s)).count() == 120);
    let bits = |rows: &[doomed::harness::MetricsRow]| {
        rows.iter()
            .flat_map(|r| {
                r.mean_abs_accel_error
                    .iter()
                    .chain(&r.mean_accel_error)
                    .chain(&r.mean_abs_offset)
                    .map(|x| x.to_bits())
                    .chain(std::iter::once(r.success as u64))
                    .collect::<Vec<_>>()
            })
            .collect::<Vec<_>>()
    };
    let reproducible = bits(&first) == bits(&second);

    let dir = tempfile::tempdir().expect("temp dir");
    let path = dir.path().join("metrics.csv");
    emit_metrics_csv(&first, &path).expect("write metrics");
    let lines = std::fs::read_to_string(&path).expect("read metrics").lines().count() - 1;
    let expected_lines = first.len() * base.dof() * 3;
    let back = read_metrics_csv(&path).expect("parse metrics");
    let round_trip = bits(&back) == bits(&first);
    let ok_points = first.iter().filter(|r| r.success).count();

    outcome(
        grid.len() == 120 && per_segment_ok && reproducible && lines == expected_lines && round_trip,
        format!(
            "{} rows ({segments} segments x 120), {lines} metric lines (3 per joint), bit-reproducible {reproducible}, csv round trip {round_trip}, {ok_points} rows with all trials safe",
            first.len()
        ),
    )
}

fn invariants() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut failures: Vec<String> = Vec::new();
    let mut record = |name: &str, r: Check| {
        if let Err(e) = r {
            failures.push(format!("{name}: {e}"));
        }
    };

    let biased = BiasedArmPlant::new(JointVec::from_element(7, 1.3), JointVec::from_element(7, 0.5))
        .expect("biased arm");
    let stiction = StictionPlant {
        mass: 1.0,
        breakaway_torque: 5.0,
        velocity_epsilon: 0.01,
    };
    for _ in 0..1000 {
        let q2 = uniform(&mut rng, 2, 10.0);
        record("planar symmetry", mass_symmetric(&PlanarSinusoidPlant, &q2));
        record("biased symmetry", mass_symmetric(&biased, &uniform(&mut rng, 7, 10.0)));
        record("stiction symmetry", mass_symmetric(&stiction, &uniform(&mut rng, 1, 10.0)));
    }
    for _ in 0..10_000 {
        let q = uniform(&mut rng, 2, 10.0);
        let lo = planar_min_eigenvalue(&q);
        if lo < 0.25 - 1e-12 {
            record("planar eigenvalue", Err(format!("{lo} at {q:?}")));
        }
    }
    for i in 0..300 {
        let (p, m) = matched_pair(&mut rng, i);
        let n = p.dof();
        let s = State::new(uniform(&mut rng, n, 3.0), uniform(&mut rng, n, 3.0), 0.0).unwrap();
        record("fd after id", fd_inverts_id(p.as_ref(), m.as_ref(), &s, &uniform(&mut rng, n, 20.0)));
    }
    record("free flight", free_flight_keeps_velocity(&uniform(&mut rng, 3, 2.0), 1e-3, 5000));
    for _ in 0..20 {
        let frac = rng.gen_range(-1.0..=1.0);
        record("stiction rest", stiction_rest_is_closed(rng.gen_range(0.1..5.0), rng.gen_range(0.1..10.0), frac, 1000));
    }
    for _ in 0..1000 {
        let d = JointVec::from_fn(7, |_, _| rng.gen_range(0.0..2.0));
        record("disturbance bound", biased_arm_disturbance_bounded(&d, &uniform(&mut rng, 7, 10.0), &uniform(&mut rng, 7, 50.0)));
    }
    for _ in 0..200 {
        let n = rng.gen_range(1..=7);
        let st = |rng: &mut ChaCha8Rng| State::new(uniform(rng, n, 3.0), uniform(rng, n, 3.0), 0.0).unwrap();
        let (s1, s2) = (st(&mut rng), st(&mut rng));
        record("pd superposition", pd_superposition(&uniform(&mut rng, n, 2.0), rng.gen_range(0.1..200.0), rng.gen_range(0.0..50.0), &s1, &s2));
    }
    for _ in 0..200 {
        let rho = lqr_closed_loop_radius(rng.gen_range(1e-3..1e3), rng.gen_range(0.0..1e2), rng.gen_range(1e-3..1e2), rng.gen_range(1e-3..1e-2));
        if !(rho < 1.0) {
            record("lqr radius", Err(format!("spectral radius {rho}")));
        }
    }
    for segs in [1usize, 4, 10] {
        let goals: Vec<JointVec> = (0..segs).map(|_| uniform(&mut rng, 2, 1.0)).collect();
        let s = State::new(uniform(&mut rng, 2, 1.0), uniform(&mut rng, 2, 1.0), 0.0).unwrap();
        record("chain continuity", chain_piecewise_continuous(&goals, &s, 0.005));
    }
    for _ in 0..200 {
        let e = uniform(&mut rng, 3, 10.0);
        record("regularized fixed point", regularized_fixed_point(&e, rng.gen_range(0.01..0.5), rng.gen_range(0.1..1.0)));
    }
    for _ in 0..1000 {
        let v = JointVec::from_fn(4, |_, _| rng.gen_range(0.0..1e3));
        record("variance scaling", variance_scaling_shrinks(rng.gen_range(0.0..10.0), &v, &uniform(&mut rng, 4, 100.0)));
    }
    for _ in 0..100 {
        let gamma: f64 = rng.gen_range(0.5..0.95);
        let prefix: Vec<_> = (0..rng.gen_range(0..50)).map(|_| uniform(&mut rng, 3, 5.0)).collect();
        let burn_in = (25.0 / (1.0 - gamma)).ceil() as usize;
        if let Err(e) = momentum_smoother_agree(&prefix, &uniform(&mut rng, 3, 5.0), rng.gen_range(0.01..0.5), gamma, burn_in, 50) {
            record("momentum/smoother", Err(e));
        }
    }
    for _ in 0..100 {
        record("indirect freeze", indirect_frozen_when_stuck(rng.gen_range(-5.0..5.0), rng.gen_range(0.001..0.5), 200));
    }
    for seed in 0..3 {
        let c = small_arm_config(seed);
        record("determinism", deterministic(&c));
        record("held torque", torque_held_between_ticks(&c));
        record("mean |e| >= |mean e|", abs_mean_dominates(&c));
        record("learning-off prefix", learning_off_prefix_identical(&c));
    }

    let n = failures.len();
    outcome(
        n == 0,
        if n == 0 {
            "dynamics, plant, policy, learner and harness invariants hold on all sampled inputs".into()
        } else {
            format!("{n} violations, first: {}", failures[0])
        },
    )
}

fn main() {
    let criteria: [(&str, Duration, fn() -> Outcome); 8] = [
        ("gradient oracle", Duration::from_secs(10), gradient_oracle),
        ("PID identity", Duration::from_secs(10), pid_identity),
        ("telescoping identity", Duration::from_secs(10), telescoping),
        ("planar switch-free reproduction", Duration::from_secs(30), planar_reproduction),
        ("biased-arm mid-run switch-on", Duration::from_secs(60), switch_on),
        ("stiction separation", Duration::from_secs(10), stiction_separation),
        ("sweep harness", Duration::from_secs(600), sweep_harness),
        ("invariant suites", Duration::from_secs(600), invariants),
    ];
    let mut all = true;
    for (i, (name, limit, run)) in criteria.iter().enumerate() {
        let t0 = Instant::now();
        let o = run();
        let elapsed = t0.elapsed();
        let passed = o.passed && elapsed <= *limit;
        all &= passed;
        println!(
            "criterion {}: {:<4} {name}: {} [{:.2} s, limit {} s]",
            i + 1,
            if passed { "PASS" } else { "FAIL" },
            o.detail,
            elapsed.as_secs_f64(),
            limit.as_secs()
        );
    }
    println!("acceptance: {}", if all { "PASS" } else { "FAIL" });
    if !all {
        std::process::exit(1);
    }
}
