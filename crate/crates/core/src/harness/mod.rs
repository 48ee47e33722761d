//! Experiment orchestration: configuration, multi-seed campaigns, CSV output
//! and cross-seed statistics.

mod artifacts;
mod campaign;
mod config;
mod csv;
mod stats;


pub use artifacts::{
    budget_table, episodes_table, transfers_table, BUDGET_FILE, BUDGET_HEADER, EPISODES_FILE, EPISODES_HEADER,
    TRANSFERS_FILE, TRANSFERS_HEADER,
};
pub use campaign::{
    coordinator, prepare_jury, run_campaign, run_seed, seed_dir, worker_count, CampaignMetadata, CampaignReport,
    CONFIG_FILE, METADATA_FILE, WORKERS_ENV,
};
pub use config::{AdvisingConfig, AgentOverrides, ExperimentConfig, Method};
pub use csv::{fmt_float, write_atomic, CsvTable, FLOAT_DIGITS};
pub use stats::{
    aggregate, aggregate_dir, compare, compare_dirs, comparison_table, final_window, mean_ci, welch, Aggregate,
    Comparison, CurvePoint, MetricSummary, SeedMetrics, Verdict, Welch, SIGNIFICANCE,
};
