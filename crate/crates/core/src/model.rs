//! Charging requests, the quadratic cost model and the instance file format.

use std::collections::HashSet;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::time::TimeStamp;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RequestId(pub u32);

impl fmt::Display for RequestId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// One vehicle's charging profile.
#[derive(Debug, Clone, PartialEq)]
pub struct ChargingRequest {
    pub id: RequestId,
    pub arrival: TimeStamp,
    pub deadline: TimeStamp,
    /// kWh
    pub demand: f64,
    /// kW
    pub max_rate: f64,
    /// kWh
    pub capacity: f64,
}

impl ChargingRequest {
    /// Builds a request, checking the structural invariants. Energy
    /// feasibility is a separate question, see [`check_request_feasible`].
    pub fn new(
        id: RequestId,
        arrival: TimeStamp,
        deadline: TimeStamp,
        demand: f64,
        max_rate: f64,
        capacity: f64,
    ) -> Result<Self> {
        let invalid = |reason: &str| Error::InvalidRequest {
            id,
            reason: reason.to_string(),
        };
        if arrival >= deadline {
            return Err(invalid("arrival must precede deadline"));
        }
        if !(demand.is_finite() && demand >= 0.0) {
            return Err(invalid("demand must be finite and non-negative"));
        }
        if !(max_rate.is_finite() && max_rate > 0.0) {
            return Err(invalid("max_rate must be finite and positive"));
        }
        if !(capacity.is_finite() && capacity > 0.0) {
            return Err(invalid("capacity must be finite and positive"));
        }
        Ok(ChargingRequest {
            id,
            arrival,
            deadline,
            demand,
            max_rate,
            capacity,
        })
    }

    /// Parking window length in hours.
    pub fn window_hours(&self) -> f64 {
        self.arrival.hours_until(self.deadline)
    }

    /// Largest deliverable energy: `min(max_rate * window, capacity)`.
    pub fn energy_limit(&self) -> f64 {
        (self.max_rate * self.window_hours()).min(self.capacity)
    }
}

/// True iff the demand can be met within the parking window and battery.
pub fn check_request_feasible(req: &ChargingRequest) -> bool {
    req.demand <= req.energy_limit()
}

/// Generation cost `a*s + b*s^2` per hour at total rate `s`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostModel {
    /// $/kWh
    pub a: f64,
    /// $/kWh/kW
    pub b: f64,
}

impl CostModel {
    /// Coefficients used throughout the reported experiments.
    pub const REFERENCE: CostModel = CostModel { a: 1e-4, b: 0.6e-4 };

    pub fn new(a: f64, b: f64) -> Result<Self> {
        let cost = CostModel { a, b };
        cost.validate()?;
        Ok(cost)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.a.is_finite() && self.a >= 0.0) {
            return Err(Error::InvalidCost(format!("a must be >= 0, got {}", self.a)));
        }
        if !(self.b.is_finite() && self.b > 0.0) {
            return Err(Error::InvalidCost(format!("b must be > 0, got {}", self.b)));
        }
        Ok(())
    }

    /// Cost of holding total rate `rate` (kW) for `hours`.
    #[inline]
    pub fn span_cost(&self, rate: f64, hours: f64) -> f64 {
        (self.a * rate + self.b * rate * rate) * hours
    }
}

impl Default for CostModel {
    fn default() -> Self {
        CostModel::REFERENCE
    }
}

/// Checks that ids are unique and every request is feasible.
pub fn validate_requests(requests: &[ChargingRequest]) -> Result<()> {
    let mut seen = HashSet::with_capacity(requests.len());
    for req in requests {
        if !seen.insert(req.id) {
            return Err(Error::DuplicateId(req.id));
        }
    }
    let infeasible: Vec<RequestId> = requests
        .iter()
        .filter(|r| !check_request_feasible(r))
        .map(|r| r.id)
        .collect();
    if infeasible.is_empty() {
        Ok(())
    } else {
        Err(Error::Infeasible(infeasible))
    }
}

/// On-disk request record; times in decimal hours.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RequestRecord {
    pub id: u32,
    pub arrival_h: f64,
    pub deadline_h: f64,
    pub demand_kwh: f64,
    pub max_rate_kw: f64,
    pub capacity_kwh: f64,
}

/// On-disk instance document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub cost: CostModel,
    pub requests: Vec<RequestRecord>,
}

/// A validated problem instance.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub cost: CostModel,
    pub requests: Vec<ChargingRequest>,
}

impl Instance {
    /// Quantizes times onto the tick grid and checks structural invariants.
    /// Energy feasibility is left to the caller so infeasible ids can be
    /// reported together.
    pub fn from_file(file: &InstanceFile) -> Result<Self> {
        file.cost.validate()?;
        let requests = file
            .requests
            .iter()
            .map(|r| {
                let id = RequestId(r.id);
                let time = |h: f64, what: &str| {
                    TimeStamp::from_hours(h).ok_or_else(|| Error::InvalidRequest {
                        id,
                        reason: format!("{what} must be a non-negative number of hours"),
                    })
                };
                ChargingRequest::new(
                    id,
                    time(r.arrival_h, "arrival_h")?,
                    time(r.deadline_h, "deadline_h")?,
                    r.demand_kwh,
                    r.max_rate_kw,
                    r.capacity_kwh,
                )
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Instance {
            cost: file.cost,
            requests,
        })
    }

    pub fn to_file(&self) -> InstanceFile {
        InstanceFile {
            cost: self.cost,
            requests: self
                .requests
                .iter()
                .map(|r| RequestRecord {
                    id: r.id.0,
                    arrival_h: r.arrival.hours(),
                    deadline_h: r.deadline.hours(),
                    demand_kwh: r.demand,
                    max_rate_kw: r.max_rate,
                    capacity_kwh: r.capacity,
                })
                .collect(),
        }
    }

    pub fn parse(text: &str, origin: &str) -> Result<Self> {
        let file: InstanceFile = serde_json::from_str(text).map_err(|source| Error::Parse {
            path: origin.to_string(),
            source,
        })?;
        Instance::from_file(&file)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Instance::parse(&text, &path.display().to_string())
    }
}
