//! Config-driven experiments: data generation from a named truth, sequential
//! consistency traces, martingale ensembles, summability reports and the CLI.

mod cli;
mod config;
mod output;
mod reports;
mod sequential;
mod truth;

pub use cli::{cli_main, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_OK};
pub use config::{BinLawSpec, ExperimentConfig, OutputSpec, PriorSpec, Scenario, SetSpec, SCHEMA_VERSION};
pub use output::{load_trace, read_trace_csv, render, write_artifacts, Artifact, Format};
pub use reports::{
    run_chi_sq, run_martingale, run_summability, summability_report, verdict_label, ChiSqOutput,
    MartingaleOutput, MartingaleSummary, SlopeSummary, SummabilityOutput,
};
pub use sequential::{replay_check, run_consistency, trace_for_data, TraceRow};
pub use truth::{generate_data, TruthSampler, TruthSpec, INVERSE_CDF_KNOTS};
