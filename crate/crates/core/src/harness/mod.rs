//! Closed-loop experiments: configuration, episode runner, metrics, sweeps,
//! the stiction comparison and CSV output.

pub mod commands;
pub mod config;
pub mod episode;
pub mod metrics;
pub mod output;
pub mod stiction;
pub mod sweep;
pub mod verify;

pub use config::{
    ExperimentConfig, InitialVelocity, LossKind, ModelSpec, PlantSpec, PolicySpec, VelocitySource,
};
pub use episode::{inject_noise, run_episode, run_trial, EpisodeTrace, TraceRow};
pub use metrics::{compute_metrics, rms_position_deviation, windowed_smoothed_error, MetricsRow};
pub use stiction::{compare_direct_indirect, StictionReport};
pub use sweep::{run_sweep, SweepGrid};
