//! Seeded Monte-Carlo episodes, regret and ranking metrics, aggregation
//! across runs and CSV output.

mod aggregate;
mod diagnostics;
mod episode;
mod metrics;
pub mod output;

pub use aggregate::{aggregate, aggregate_with, nearest_rank_quantile, AggregateReport, MetricCurve};
pub use diagnostics::{forcing_phase_end, phase_diagnostics, PhaseDiagnostics};
pub use episode::{
    plugin_allocation, run_episode, run_seed, run_seeds, CheckpointSpec, EpisodeTrace, Experiment, POLICY_STREAM,
};
pub use metrics::{dcg, rank_metrics, ranking, regret, RankMetrics, RegretEvaluator};
