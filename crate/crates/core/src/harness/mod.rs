//! Seeded, reproducible experiment runs and sweeps with file outputs.

pub mod cli;
mod config;
mod output;
mod run;
mod sweep;

pub use config::{
    load_config, BuiltObjective, EigenConfig, EigenPolicy, ExperimentConfig, InitConfig, LrConfig, ObjectiveConfig,
    Preset,
};
pub use output::{read_summary, read_trace_csv, trace_csv, write_outputs, Checkpoint, CHECKPOINT_VERSION, TRACE_HEADER};
pub use run::{eigen_batch, resume, run, BatchSampler, EigenSample, RunResult, RunState, RunStatus, RunSummary};
pub use sweep::{
    aggregate, aggregate_csv, compare, expand_grid, mean, median, spearman, summary_csv, sweep, sweep_configs, write_sweep,
    AggregateRow, GridAxis, GridPoint, SweepResult, SweepRun,
};
