//! Reference solver: exact block coordinate descent over requests.
//!
//! Each pass re-optimises one request at a time with all others fixed,
//! which is a water-filling problem on the other requests' totals. The
//! objective is strictly convex in every block, so the passes converge to
//! the global optimum.

use crate::error::{Error, Result};
use crate::intervals::decompose_intervals;
use crate::model::{validate_requests, ChargingRequest, CostModel};
use crate::schedule::{RateSchedule, RequestRates};

use super::kkt::verify_kkt_problem;
use super::Problem;

/// Convergence tolerance on the KKT violations, kW.
pub const ORACLE_TOL: f64 = 1e-7;

pub const ORACLE_MAX_PASSES: usize = 1_000_000;

/// Rates `clamp(level - base_k, 0, cap)` delivering `demand` over `lengths`.
fn water_fill(base: &[f64], lengths: &[f64], cap: f64, demand: f64, out: &mut [f64], points: &mut Vec<(f64, f64)>) {
    if demand <= 0.0 {
        out.iter_mut().for_each(|x| *x = 0.0);
        return;
    }
    points.clear();
    for (&o, &len) in base.iter().zip(lengths) {
        points.push((o, len));
        points.push((o + cap, -len));
    }
    points.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut level = points.last().map_or(0.0, |p| p.0);
    let mut prev = points[0].0;
    let mut slope = 0.0;
    let mut filled = 0.0;
    for &(pt, ds) in points.iter() {
        let gain = slope * (pt - prev);
        if slope > 0.0 && filled + gain >= demand {
            level = prev + (demand - filled) / slope;
            break;
        }
        filled += gain;
        prev = pt;
        slope += ds;
    }
    for ((x, &o), _) in out.iter_mut().zip(base).zip(lengths) {
        *x = (level - o).clamp(0.0, cap);
    }
}

/// Solves a bare problem; returns per-job rates over each span and the totals.
pub fn oracle_solve_problem(problem: &Problem, tol: f64) -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
    let lengths = problem.lengths();
    let jobs = problem.jobs();
    let mut rates: Vec<Vec<f64>> = jobs
        .iter()
        .map(|j| {
            let window: f64 = lengths[j.span.clone()].iter().sum();
            vec![if window > 0.0 { j.demand / window } else { 0.0 }; j.span.len()]
        })
        .collect();
    let mut totals = vec![0.0; problem.num_intervals()];
    for (j, r) in jobs.iter().zip(&rates) {
        for (k, &x) in j.span.clone().zip(r) {
            totals[k] += x;
        }
    }

    let mut base = Vec::new();
    let mut points = Vec::new();
    let mut violation = f64::INFINITY;
    for _ in 0..ORACLE_MAX_PASSES {
        for (j, r) in jobs.iter().zip(rates.iter_mut()) {
            base.clear();
            base.extend(j.span.clone().zip(r.iter()).map(|(k, &x)| totals[k] - x));
            water_fill(&base, &lengths[j.span.clone()], j.max_rate, j.demand, r, &mut points);
            for ((k, &x), &o) in j.span.clone().zip(r.iter()).zip(&base) {
                totals[k] = o + x;
            }
        }
        let report = verify_kkt_problem(problem, &rates, &totals, tol);
        violation = report.max_violation();
        if report.passed {
            return Ok((rates, totals));
        }
    }
    Err(Error::OracleDidNotConverge {
        passes: ORACLE_MAX_PASSES,
        violation,
    })
}

/// Independent optimal schedule, for cross-checking [`super::solve_offline`].
pub fn oracle_solve(requests: &[ChargingRequest], cost: &CostModel, tol: f64) -> Result<RateSchedule> {
    cost.validate()?;
    validate_requests(requests)?;
    let decomp = decompose_intervals(requests);
    let problem = Problem::from_decomposition(&decomp, requests);
    let (rates, _) = oracle_solve_problem(&problem, tol)?;
    let entries = requests
        .iter()
        .zip(rates)
        .enumerate()
        .map(|(pos, (r, rates))| RequestRates {
            id: r.id,
            first_interval: decomp.span(pos).start,
            rates,
        })
        .collect();
    RateSchedule::new(entries, decomp.num_intervals())
}
