//! Experiment orchestration: run configuration, training with early
//! stopping, evaluation of snapshots, convergence curves, grid search,
//! dataset preparation and the invariant suites.

mod config;
mod curve;
mod grid;
mod prep;
mod train;
mod verify;

pub use config::{LossName, OptimizerName, RunConfig, StopMetric, TargetChoice, KEYS};
pub use curve::{emit_convergence_curve, read_curve, write_curve, CurveMetric, CurvePoint, CURVE_HEADER};
pub use grid::{
    best_point, grid_search, GridPoint, GridSpec, LR_GRID, RG_GRID, WEIGHT_DECAY_GRID, WRMF_ALPHA_GRID,
    WRMF_LAMBDA_GRID,
};
pub use prep::{prep, PrepOptions, PrepSummary};
pub use train::{
    als_config, load_datasets, read_logs, read_set_file, run_eval, run_train, sgd_config, target_variant, train_on,
    write_logs, write_snapshot, Datasets, TrainOutcome,
};
pub use verify::{run_verify, Fault, SuiteReport, VerifyOptions, VerifyReport, GRADIENT_OPS, SUITES};
