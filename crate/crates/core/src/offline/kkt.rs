use serde::Serialize;

use crate::error::{Error, Result};
use crate::intervals::IntervalDecomposition;
use crate::model::ChargingRequest;
use crate::schedule::RateSchedule;

use super::Problem;

/// Default tolerance for [`verify_kkt`], kW.
pub const KKT_TOL: f64 = 1e-6;

/// Rates within this distance of 0 or the cap count as at the bound.
const BOUND_EPS: f64 = 1e-9;

/// Violations of the optimality conditions, kW.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KktReport {
    /// Spread of totals over intervals where a request is strictly inside its bounds.
    pub max_balance_violation: f64,
    /// Excess of a positive-rate total over a zero-rate total, per request.
    pub max_zero_rate_violation: f64,
    /// Excess of a capped-rate total over a below-cap total, per request.
    pub max_cap_rate_violation: f64,
    pub passed: bool,
}

impl KktReport {
    pub fn max_violation(&self) -> f64 {
        self.max_balance_violation
            .max(self.max_zero_rate_violation)
            .max(self.max_cap_rate_violation)
    }
}

/// Checks the per-request optimality conditions of `schedule`.
pub fn verify_kkt(
    schedule: &RateSchedule,
    requests: &[ChargingRequest],
    decomp: &IntervalDecomposition,
    tol: f64,
) -> Result<KktReport> {
    if schedule.num_intervals() != decomp.num_intervals() || schedule.entries().len() != requests.len() {
        return Err(Error::ScheduleMismatch(
            "schedule shape does not match the decomposition".into(),
        ));
    }
    let problem = Problem::from_decomposition(decomp, requests);
    let mut rates = Vec::with_capacity(requests.len());
    for (pos, (entry, req)) in schedule.entries().iter().zip(requests).enumerate() {
        if entry.id != req.id || entry.intervals() != decomp.span(pos) {
            return Err(Error::ScheduleMismatch(format!(
                "entry for request {} does not match its span",
                req.id
            )));
        }
        rates.push(entry.rates.clone());
    }
    Ok(verify_kkt_problem(&problem, &rates, schedule.totals(), tol))
}

/// [`verify_kkt`] on a bare problem with per-job rates over each span.
pub fn verify_kkt_problem(problem: &Problem, rates: &[Vec<f64>], totals: &[f64], tol: f64) -> KktReport {
    let mut balance: f64 = 0.0;
    let mut zero: f64 = 0.0;
    let mut cap: f64 = 0.0;
    for (job, x) in problem.jobs().iter().zip(rates) {
        let u = job.max_rate;
        let mut interior = (f64::INFINITY, f64::NEG_INFINITY);
        let mut max_positive = f64::NEG_INFINITY;
        let mut min_below_cap = f64::INFINITY;
        for (k, &r) in job.span.clone().zip(x) {
            let s = totals[k];
            let at_zero = r <= BOUND_EPS;
            let at_cap = r >= u - BOUND_EPS;
            if !at_zero && !at_cap {
                interior = (interior.0.min(s), interior.1.max(s));
            }
            if !at_zero {
                max_positive = max_positive.max(s);
            }
            if !at_cap {
                min_below_cap = min_below_cap.min(s);
            }
        }
        if interior.1 >= interior.0 {
            balance = balance.max(interior.1 - interior.0);
        }
        for (k, &r) in job.span.clone().zip(x) {
            let s = totals[k];
            if r <= BOUND_EPS && max_positive.is_finite() {
                zero = zero.max(max_positive - s);
            }
            if r >= u - BOUND_EPS && min_below_cap.is_finite() {
                cap = cap.max(s - min_below_cap);
            }
        }
    }
    KktReport {
        max_balance_violation: balance,
        max_zero_rate_violation: zero,
        max_cap_rate_violation: cap,
        passed: balance <= tol && zero <= tol && cap <= tol,
    }
}
