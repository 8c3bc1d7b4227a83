//! Stochastic scenarios, replications and ratio statistics.

mod config;
mod experiment;

pub use config::{PevType, ScenarioConfig, Segment};
pub use experiment::{
    aggregate_ratios, cost_ratio, generate_instance, mean_and_std_err, q_sweep, replication_seeds, run_replication,
    simulate, AlgorithmOutcome, QSweep, RatioSummary, ReplicationResult, SweepPoint,
};
