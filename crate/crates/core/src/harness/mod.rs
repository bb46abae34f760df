//! Config-driven training runs, sweeps, landscape grids and convergence
//! summaries.

mod config;
mod convergence;
mod landscape;
mod metrics;
mod run;
mod sweep;

pub use config::{
    DatasetKind, DatasetSpec, ExperimentConfig, Fallback, LetsSpec, LrSchedule, ModelSpec,
    OptimizerSpec, RadiusScheduleKind, TrainSpec, Variant,
};
pub use convergence::{convergence_summary, load_curve, ConvergenceReport, HorizonStat, RunCurve};
pub use landscape::{landscape_grid, LandscapeGrid};
pub use metrics::{read_metrics_csv, write_metrics_csv, MetricsRecord, METRICS_HEADER};
pub use run::{
    build_model, prepare_data, run_experiment, step_budget, PreparedData, RunOutput, RunSummary,
    PER_STEP_LOG_LIMIT,
};
pub use sweep::{sweep, SweepParam, SweepRow, SweepTable};
