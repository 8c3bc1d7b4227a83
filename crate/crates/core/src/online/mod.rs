//! Event-driven online execution of the OA, ORCHARD, AVG and EG policies.
//!
//! The engine clock runs in continuous hours: arrivals and deadlines sit on
//! the tick grid, but a PEV finishes whenever its residual demand runs out
//! under the current rates, which is generally between ticks.

mod engine;
mod policy;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ChargingRequest, RequestId};
use crate::schedule::DEMAND_TOL;
use crate::time::TimeStamp;

pub use engine::{run_online, run_online_with, OnlineRun, TraceSegment};
pub use policy::{avg_rates, eg_rates, oa_rates, orchard_rates};

/// Online policy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "UPPERCASE")]
pub enum AlgorithmKind {
    Oa,
    Orchard { q: f64 },
    Avg,
    Eg,
}

impl AlgorithmKind {
    pub fn name(&self) -> &'static str {
        match self {
            AlgorithmKind::Oa => "OA",
            AlgorithmKind::Orchard { .. } => "ORCHARD",
            AlgorithmKind::Avg => "AVG",
            AlgorithmKind::Eg => "EG",
        }
    }

    /// Speed-up factor; 1 for every policy but ORCHARD.
    pub fn q(&self) -> f64 {
        match self {
            AlgorithmKind::Orchard { q } => *q,
            _ => 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            AlgorithmKind::Orchard { q } if !(q.is_finite() && *q >= 1.0) => {
                Err(Error::Domain(format!("ORCHARD speed-up must be >= 1, got {q}")))
            }
            _ => Ok(()),
        }
    }

    /// Whether decisions depend on the residual demands (and so must be
    /// recomputed at every arrival and finish).
    pub fn is_adaptive(&self) -> bool {
        matches!(self, AlgorithmKind::Oa | AlgorithmKind::Orchard { .. })
    }
}

impl fmt::Display for AlgorithmKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AlgorithmKind::Orchard { q } => write!(f, "ORCHARD(q={q})"),
            other => f.write_str(other.name()),
        }
    }
}

/// Parses `oa`, `avg`, `eg`, `orchard` (q = 1.46) or `orchard:<q>`, case-insensitively.
impl FromStr for AlgorithmKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        let (name, q) = match lower.split_once(':') {
            Some((n, q)) => (n, Some(q)),
            None => (lower.as_str(), None),
        };
        let kind = match (name, q) {
            ("oa", None) => AlgorithmKind::Oa,
            ("avg", None) => AlgorithmKind::Avg,
            ("eg", None) => AlgorithmKind::Eg,
            ("orchard", None) => AlgorithmKind::Orchard { q: DEFAULT_Q },
            ("orchard", Some(q)) => AlgorithmKind::Orchard {
                q: q.parse()
                    .map_err(|_| Error::Domain(format!("bad speed-up factor {q:?}")))?,
            },
            _ => return Err(Error::Domain(format!("unknown algorithm {s:?}"))),
        };
        kind.validate()?;
        Ok(kind)
    }
}

/// Speed-up factor minimising the worst-case ratio.
pub const DEFAULT_Q: f64 = 1.46;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EventKind {
    Arrival,
    Finished,
    Departure,
}

/// Something that happened during a run. Same-time events are ordered
/// arrival, finished, departure, then by id.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OnlineEvent {
    pub time_h: f64,
    pub kind: EventKind,
    pub id: RequestId,
}

/// A parked PEV that has not finished charging.
#[derive(Debug, Clone, PartialEq)]
pub struct PresentPev {
    pub id: RequestId,
    pub arrival: TimeStamp,
    pub deadline: TimeStamp,
    /// kWh
    pub demand: f64,
    /// kW
    pub max_rate: f64,
    /// kWh still owed.
    pub residual: f64,
}

impl PresentPev {
    pub fn new(req: &ChargingRequest) -> Self {
        PresentPev {
            id: req.id,
            arrival: req.arrival,
            deadline: req.deadline,
            demand: req.demand,
            max_rate: req.max_rate,
            residual: req.demand,
        }
    }
}

/// Parked, unfinished PEVs at the current engine time.
#[derive(Debug, Clone, Default)]
pub struct OnlineState {
    /// Hours.
    pub now: f64,
    pub present: Vec<PresentPev>,
}

impl OnlineState {
    pub fn new(now: f64) -> Self {
        OnlineState {
            now,
            present: Vec::new(),
        }
    }

    /// Adds a PEV with its full demand as residual. Returns `false` (and
    /// adds nothing) when there is nothing to charge.
    pub fn admit(&mut self, req: &ChargingRequest) -> bool {
        if req.demand <= DEMAND_TOL {
            return false;
        }
        self.present.push(PresentPev::new(req));
        true
    }

    /// Charges every present PEV at `rates` (aligned with `present`) for
    /// `elapsed` hours, advances the clock, and removes and returns the
    /// PEVs whose residual demand is now met.
    pub fn update_residuals(&mut self, elapsed: f64, rates: &[f64]) -> Result<Vec<RequestId>> {
        assert_eq!(rates.len(), self.present.len(), "one rate per present PEV");
        if elapsed < 0.0 {
            return Err(Error::OnlineFault {
                time_h: self.now,
                reason: format!("time moved backwards by {} h", -elapsed),
            });
        }
        self.now += elapsed;
        for (p, &x) in self.present.iter_mut().zip(rates) {
            let left = p.residual - x * elapsed;
            if left < -DEMAND_TOL {
                return Err(Error::OnlineFault {
                    time_h: self.now,
                    reason: format!("PEV {} over-charged by {:.3e} kWh", p.id, -left),
                });
            }
            p.residual = left.max(0.0);
        }
        let mut finished = Vec::new();
        self.present.retain(|p| {
            let done = p.residual <= DEMAND_TOL;
            if done {
                finished.push(p.id);
            }
            !done
        });
        Ok(finished)
    }
}
