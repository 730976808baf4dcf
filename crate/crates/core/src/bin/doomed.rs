use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use doomed::harness::commands;
use doomed::harness::SweepGrid;

#[derive(Parser)]
#[command(
    name = "doomed",
    about = "Direct online acceleration-error learners: simulation, sweeps and checks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Overrides the seed from the config file.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Run one closed-loop experiment and write its traces and metrics.
    Simulate { config: PathBuf },
    /// Cross learning rate, variance gain and momentum over a grid.
    Sweep {
        config: PathBuf,
        #[arg(long)]
        grid: Option<PathBuf>,
    },
    /// Check the PID and virtual-velocity identities on random logs.
    Verify,
    /// Direct vs. indirect learner on a stuck joint.
    Compare { config: PathBuf },
    /// Print the version.
    Version,
}

fn run(cli: Cli) -> doomed::Result<bool> {
    match cli.command {
        Command::Simulate { config } => {
            let cfg = commands::load_config(&config, cli.seed)?;
            let out = commands::simulate(&cfg, &cli.out)?;
            for (path, trace) in &out.traces {
                let status = trace.failure.as_deref().unwrap_or("ok");
                println!("{} ({} ticks, {status})", path.display(), trace.len());
            }
            println!("{}", out.metrics_path.display());
            Ok(true)
        }
        Command::Sweep { config, grid } => {
            let cfg = commands::load_config(&config, cli.seed)?;
            let grid = match grid {
                Some(p) => SweepGrid::load(&p)?,
                None => SweepGrid::default(),
            };
            let (rows, path) = commands::sweep(&cfg, &grid, &cli.out)?;
            let ok = rows.iter().filter(|r| r.success).count();
            println!(
                "{} rows ({ok} successful) -> {}",
                rows.len(),
                path.display()
            );
            Ok(true)
        }
        Command::Verify => {
            let (report, path) = commands::verify(cli.seed.unwrap_or(0), &cli.out)?;
            println!("{report}\n-> {}", path.display());
            Ok(report.passed())
        }
        Command::Compare { config } => {
            let cfg = commands::load_config(&config, cli.seed)?;
            let (report, paths) = commands::compare(&cfg, &cli.out)?;
            print!("{}", commands::describe_compare(&report));
            for p in paths {
                println!("{}", p.display());
            }
            Ok(true)
        }
        Command::Version => {
            println!("doomed {}", env!("CARGO_PKG_VERSION"));
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
