//! Experiment orchestration: config files, seeded runs with per-episode
//! logs, last-100 aggregation, comparison tables, learning-curve figures,
//! grid sweeps and the built-in verification suite.

pub mod aggregate;
pub mod config;
pub mod plot;
pub mod run;
pub mod sweep;
pub mod verify;

pub use aggregate::{aggregate_last100, compare, Aggregate, ComparisonRow, ComparisonTable, VariantSummary};
pub use config::{ExperimentConfig, Overrides};
pub use plot::{learning_curve, plot_learning_curves, Figure, LearningCurve};
pub use run::{run_experiment, EpisodeRecord, EvalRecord, Manifest, RunLogs, SeedState, SeedStatus};
pub use sweep::{parse_grid, sweep, Axis, SweepResult};
