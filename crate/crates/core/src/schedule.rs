//! Piecewise-constant rate schedules, their cost, and feasibility checks.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::intervals::IntervalDecomposition;
use crate::model::{ChargingRequest, CostModel, RequestId};

/// Slack allowed between an interval total and the sum of its rates.
pub const TOTALS_TOL: f64 = 1e-9;

/// Default tolerance on delivered energy, kWh.
pub const DEMAND_TOL: f64 = 1e-6;

/// Rates of one request over its contiguous span of intervals.
#[derive(Debug, Clone, PartialEq)]
pub struct RequestRates {
    pub id: RequestId,
    pub first_interval: usize,
    /// kW, one entry per interval of the span.
    pub rates: Vec<f64>,
}

impl RequestRates {
    pub fn intervals(&self) -> std::ops::Range<usize> {
        self.first_interval..self.first_interval + self.rates.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateSchedule {
    entries: Vec<RequestRates>,
    totals: Vec<f64>,
}

impl RateSchedule {
    /// Builds a schedule over `num_intervals` intervals, summing totals.
    pub fn new(entries: Vec<RequestRates>, num_intervals: usize) -> Result<Self> {
        let mut totals = vec![0.0; num_intervals];
        for e in &entries {
            if e.intervals().end > num_intervals {
                return Err(Error::ScheduleMismatch(format!(
                    "request {} extends past interval {}",
                    e.id, num_intervals
                )));
            }
            for (k, &x) in e.intervals().zip(&e.rates) {
                totals[k] += x;
            }
        }
        Ok(RateSchedule { entries, totals })
    }

    /// Builds a schedule with caller-supplied totals, checking that they
    /// agree with the per-request rates.
    pub fn with_totals(entries: Vec<RequestRates>, totals: Vec<f64>) -> Result<Self> {
        let summed = RateSchedule::new(entries, totals.len())?;
        for (k, (&given, &sum)) in totals.iter().zip(&summed.totals).enumerate() {
            if (given - sum).abs() > TOTALS_TOL * given.abs().max(1.0) {
                return Err(Error::ScheduleMismatch(format!(
                    "interval {k}: total {given} but rates sum to {sum}"
                )));
            }
        }
        Ok(RateSchedule {
            entries: summed.entries,
            totals,
        })
    }

    pub fn entries(&self) -> &[RequestRates] {
        &self.entries
    }

    /// Total rate per interval, kW.
    pub fn totals(&self) -> &[f64] {
        &self.totals
    }

    pub fn num_intervals(&self) -> usize {
        self.totals.len()
    }

    pub fn entry(&self, id: RequestId) -> Option<&RequestRates> {
        self.entries.iter().find(|e| e.id == id)
    }

    /// Rate of `id` in interval `k`, `None` outside its span.
    pub fn rate(&self, id: RequestId, k: usize) -> Option<f64> {
        let e = self.entry(id)?;
        e.intervals().contains(&k).then(|| e.rates[k - e.first_interval])
    }
}

fn check_shape(schedule: &RateSchedule, decomp: &IntervalDecomposition) -> Result<()> {
    if schedule.num_intervals() != decomp.num_intervals() {
        return Err(Error::ScheduleMismatch(format!(
            "schedule has {} intervals, decomposition has {}",
            schedule.num_intervals(),
            decomp.num_intervals()
        )));
    }
    if schedule.entries.len() != decomp.num_requests() {
        return Err(Error::ScheduleMismatch(format!(
            "schedule has {} requests, decomposition has {}",
            schedule.entries.len(),
            decomp.num_requests()
        )));
    }
    for (pos, e) in schedule.entries.iter().enumerate() {
        if e.id != decomp.ids()[pos] || e.intervals() != decomp.span(pos) {
            return Err(Error::ScheduleMismatch(format!(
                "request {} does not cover its parking span",
                e.id
            )));
        }
    }
    Ok(())
}

/// Total cost `sum_k (a*s_k + b*s_k^2) * delta_k` in dollars.
pub fn evaluate_cost(schedule: &RateSchedule, decomp: &IntervalDecomposition, cost: &CostModel) -> Result<f64> {
    if schedule.num_intervals() != decomp.num_intervals() {
        return Err(Error::ScheduleMismatch(format!(
            "schedule has {} intervals, decomposition has {}",
            schedule.num_intervals(),
            decomp.num_intervals()
        )));
    }
    Ok(schedule
        .totals
        .iter()
        .zip(decomp.lengths())
        .map(|(&s, &len)| cost.span_cost(s, len))
        .sum())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RequestCheck {
    pub id: RequestId,
    /// kWh
    pub delivered: f64,
    /// kWh, zero when the demand is met.
    pub shortfall: f64,
    pub demand_violated: bool,
    /// Largest excursion outside `[0, max_rate]`, kW.
    pub rate_excess: f64,
    pub rate_violated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeasibilityReport {
    pub requests: Vec<RequestCheck>,
    pub feasible: bool,
}

impl FeasibilityReport {
    pub fn max_shortfall(&self) -> f64 {
        self.requests.iter().map(|r| r.shortfall).fold(0.0, f64::max)
    }
}

/// Checks demand delivery and rate bounds for every request.
pub fn validate_schedule(
    schedule: &RateSchedule,
    requests: &[ChargingRequest],
    decomp: &IntervalDecomposition,
    demand_tol: f64,
) -> Result<FeasibilityReport> {
    check_shape(schedule, decomp)?;
    let checks: Vec<RequestCheck> = requests
        .iter()
        .zip(&schedule.entries)
        .map(|(req, e)| {
            let delivered: f64 = e.intervals().zip(&e.rates).map(|(k, &x)| x * decomp.length(k)).sum();
            let shortfall = (req.demand - delivered).max(0.0);
            let rate_excess = e
                .rates
                .iter()
                .map(|&x| (x - req.max_rate).max(-x).max(0.0))
                .fold(0.0, f64::max);
            RequestCheck {
                id: req.id,
                delivered,
                shortfall,
                demand_violated: shortfall > demand_tol,
                rate_excess,
                rate_violated: rate_excess > TOTALS_TOL,
            }
        })
        .collect();
    let feasible = checks.iter().all(|c| !c.demand_violated && !c.rate_violated);
    Ok(FeasibilityReport {
        requests: checks,
        feasible,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::intervals::decompose_intervals;
    use crate::time::TimeStamp;
    use approx::assert_relative_eq;

    fn req(id: u32, from: f64, to: f64, demand: f64, max_rate: f64) -> ChargingRequest {
        ChargingRequest::new(
            RequestId(id),
            TimeStamp::from_hours(from).unwrap(),
            TimeStamp::from_hours(to).unwrap(),
            demand,
            max_rate,
            100.0,
        )
        .unwrap()
    }

    fn single(rate: f64, demand: f64) -> (Vec<ChargingRequest>, IntervalDecomposition, RateSchedule) {
        let reqs = vec![req(1, 0.0, 4.0, demand, 3.3)];
        let d = decompose_intervals(&reqs);
        let s = RateSchedule::new(
            vec![RequestRates {
                id: RequestId(1),
                first_interval: 0,
                rates: vec![rate],
            }],
            1,
        )
        .unwrap();
        (reqs, d, s)
    }

    #[test]
    fn cost_of_constant_rate() {
        let reqs = vec![req(1, 0.0, 1.0, 10.0, 20.0)];
        let d = decompose_intervals(&reqs);
        let s = RateSchedule::new(
            vec![RequestRates {
                id: RequestId(1),
                first_interval: 0,
                rates: vec![10.0],
            }],
            1,
        )
        .unwrap();
        assert_relative_eq!(
            evaluate_cost(&s, &d, &CostModel::REFERENCE).unwrap(),
            0.007,
            max_relative = 1e-12
        );
    }

    #[test]
    fn cost_of_zero_schedule() {
        let (_, d, s) = single(0.0, 0.0);
        assert_eq!(evaluate_cost(&s, &d, &CostModel::REFERENCE).unwrap(), 0.0);
    }

    #[test]
    fn cost_is_piecewise_sum() {
        // 1 kW on [0,2], 3 kW on [2,3]
        let reqs = vec![req(1, 0.0, 2.0, 2.0, 5.0), req(2, 2.0, 3.0, 3.0, 5.0)];
        let d = decompose_intervals(&reqs);
        let s = RateSchedule::new(
            vec![
                RequestRates {
                    id: RequestId(1),
                    first_interval: 0,
                    rates: vec![1.0],
                },
                RequestRates {
                    id: RequestId(2),
                    first_interval: 1,
                    rates: vec![3.0],
                },
            ],
            2,
        )
        .unwrap();
        assert_relative_eq!(
            evaluate_cost(&s, &d, &CostModel::REFERENCE).unwrap(),
            1.16e-3,
            max_relative = 1e-12
        );
    }

    #[test]
    fn mismatched_schedule_is_structural_error() {
        let (_, d, _) = single(1.0, 4.0);
        let s = RateSchedule::new(vec![], 2).unwrap();
        assert!(matches!(
            evaluate_cost(&s, &d, &CostModel::REFERENCE),
            Err(Error::ScheduleMismatch(_))
        ));
    }

    #[test]
    fn exact_delivery_is_feasible() {
        let (reqs, d, s) = single(1.0, 4.0);
        let rep = validate_schedule(&s, &reqs, &d, DEMAND_TOL).unwrap();
        assert!(rep.feasible);
        assert_relative_eq!(rep.requests[0].delivered, 4.0);
    }

    #[test]
    fn shortfall_is_flagged() {
        let (reqs, d, s) = single(0.9, 4.0);
        let rep = validate_schedule(&s, &reqs, &d, DEMAND_TOL).unwrap();
        assert!(!rep.feasible);
        assert_relative_eq!(rep.requests[0].shortfall, 0.4, max_relative = 1e-12);
        assert!(rep.requests[0].demand_violated);
    }

    #[test]
    fn rate_bound_breach_is_flagged() {
        let (reqs, d, s) = single(3.4, 4.0);
        let rep = validate_schedule(&s, &reqs, &d, DEMAND_TOL).unwrap();
        assert!(!rep.feasible);
        assert!(rep.requests[0].rate_violated);
        assert_relative_eq!(rep.requests[0].rate_excess, 0.1, max_relative = 1e-9);
    }

    #[test]
    fn inconsistent_totals_rejected() {
        let e = vec![RequestRates {
            id: RequestId(1),
            first_interval: 0,
            rates: vec![1.0],
        }];
        assert!(RateSchedule::with_totals(e.clone(), vec![1.0]).is_ok());
        assert!(RateSchedule::with_totals(e, vec![1.1]).is_err());
    }
}
