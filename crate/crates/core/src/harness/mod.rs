//! Experiment configuration, single runs, parameter sweeps and power-law fits.

pub mod config;
pub mod fit;
pub mod pipeline;
pub mod sweep;

pub use config::{parse_config, parse_config_str, ExperimentConfig};
pub use fit::{fit_powerlaw, PowerLawFit};
pub use pipeline::{
    run_pipeline, run_pipeline_in, run_stage, write_record, ApproximationReport, ComparisonRow, Diagnostics, Pipeline,
    RunRecord, Stage, Timing,
};
pub use sweep::{run_sweep, BetaFit, SweepResult, SweepRow};
