use thiserror::Error;

use crate::model::RequestId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("request {id}: {reason}")]
    InvalidRequest { id: RequestId, reason: String },

    #[error("infeasible requests (demand exceeds min(max_rate * window, capacity)): {}", join_ids(.0))]
    Infeasible(Vec<RequestId>),

    #[error("duplicate request id {0}")]
    DuplicateId(RequestId),

    #[error("invalid cost model: {0}")]
    InvalidCost(String),

    #[error("schedule does not match decomposition: {0}")]
    ScheduleMismatch(String),

    #[error("domain error: {0}")]
    Domain(String),

    /// An allocation left its bounds or an accounting identity broke.
    /// This always indicates a solver bug, never bad input.
    #[error("internal inconsistency: {0}")]
    Internal(String),

    #[error("oracle did not converge after {passes} passes (max KKT violation {violation:e} kW)")]
    OracleDidNotConverge { passes: usize, violation: f64 },

    #[error("online engine fault at t={time_h:.6}h: {reason}")]
    OnlineFault { time_h: f64, reason: String },

    #[error("invalid scenario config: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Parse {
        path: String,
        #[source]
        source: serde_json::Error,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

fn join_ids(ids: &[RequestId]) -> String {
    ids.iter().map(|id| id.to_string()).collect::<Vec<_>>().join(", ")
}
