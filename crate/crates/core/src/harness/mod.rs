//! Experiment configs, seeded sweeps over the episode budget, exact
//! suboptimality metrics and log-log scaling fits.

mod config;
mod scaling;
mod sweep;

pub use config::{CalibrationSpec, EnvSpec, ExperimentConfig, LogCovers, RewardSpec};
pub use scaling::{
    fit_scaling, fit_scaling_csv, median, ols_slope, suite_mean, ScalingFit, BOOTSTRAP_SAMPLES,
    MIN_POINTS, SUBOPT_FLOOR, SUITE_MEAN_ID,
};
pub use sweep::{
    artifact_file_name, determinism_digest, metrics_csv, read_metrics, run_exploration, run_sweep,
    CellCalibration, DimRow, MetricRow, SweepOutput, SweepSummary, CSV_HEADER,
};
