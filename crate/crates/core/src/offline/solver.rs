use crate::error::{Error, Result};
use crate::intervals::{decompose_intervals, IntervalDecomposition};
use crate::model::{validate_requests, ChargingRequest, CostModel};
use crate::schedule::{evaluate_cost, RateSchedule, RequestRates, TOTALS_TOL};

use super::allocate::AllocationMethod;
use super::state::SolverState;
use super::Problem;

/// How each iteration finds its peak set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PeakSearch {
    /// Exact densest-set search (prefix scan or min-cut).
    #[default]
    Exact,
    /// Time windows and their intensity-ordered prefixes only.
    Windows,
}

/// One solver iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct PeakStep {
    pub iteration: usize,
    /// Frozen intervals, ascending.
    pub members: Vec<usize>,
    pub total_length: f64,
    /// kW
    pub rate: f64,
    /// Jobs scheduled in this iteration.
    pub scheduled: Vec<usize>,
    pub method: AllocationMethod,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSolution {
    /// Per job, one rate per interval of its span.
    pub rates: Vec<Vec<f64>>,
    pub totals: Vec<f64>,
    pub peaks: Vec<PeakStep>,
}

impl ProblemSolution {
    /// Largest increase of a peak rate over its predecessor (zero if the
    /// sequence is non-increasing).
    pub fn max_peak_increase(&self) -> f64 {
        self.peaks
            .windows(2)
            .map(|w| (w[1].rate - w[0].rate).max(0.0))
            .fold(0.0, f64::max)
    }
}

/// Runs the iterative peak-extraction solver to completion.
pub fn solve_problem(problem: &Problem, search: PeakSearch) -> Result<ProblemSolution> {
    let mut state = SolverState::new(problem);
    let scale = problem.energy_scale();
    while !state.is_done() {
        let found = match search {
            PeakSearch::Exact => state.densest_set(),
            PeakSearch::Windows => state.select_peak_set(),
        };
        let Some((set, rate)) = found else {
            return Err(Error::Internal(
                "active requests remain but no open interval is left".into(),
            ));
        };
        if search == PeakSearch::Exact {
            if let Some(prev) = state.peaks().last() {
                if rate > prev.rate + 1e-9 * prev.rate.abs().max(1.0) {
                    return Err(Error::Internal(format!(
                        "peak rate rose from {} to {rate} at iteration {}",
                        prev.rate,
                        state.iteration()
                    )));
                }
            }
        }
        state.allocate_rates(&set, rate)?;
    }

    let mut totals = vec![0.0; problem.num_intervals()];
    for (job, rates) in problem.jobs().iter().zip(&state.rates) {
        for (k, &x) in job.span.clone().zip(rates) {
            totals[k] += x;
        }
    }
    for (k, &total) in totals.iter().enumerate() {
        let expected = state.frozen_rate(k).unwrap_or(state.carried_rate(k));
        if (total - expected).abs() > TOTALS_TOL * scale {
            return Err(Error::Internal(format!(
                "interval {k}: rates sum to {total}, expected {expected}"
            )));
        }
    }
    Ok(ProblemSolution {
        rates: state.rates,
        totals,
        peaks: state.peaks,
    })
}

/// Rates of every job in interval 0 of an optimal schedule.
///
/// Only the first peak set is computed when all spans start at interval 0
/// (the snapshot an online re-solve produces); the optimal totals are then
/// non-increasing in time, so that set always contains interval 0.
pub fn first_interval_rates(problem: &Problem) -> Result<Vec<f64>> {
    let first = |rates: &[Vec<f64>]| -> Vec<f64> {
        problem
            .jobs()
            .iter()
            .zip(rates)
            .map(|(job, r)| {
                if job.span.start == 0 && !r.is_empty() {
                    r[0]
                } else {
                    0.0
                }
            })
            .collect()
    };
    let mut state = SolverState::new(problem);
    if state.is_done() || problem.num_intervals() == 0 {
        return Ok(vec![0.0; problem.jobs().len()]);
    }
    if !state.is_common_start() || !state.is_interval_active(0) {
        return Ok(first(&solve_problem(problem, PeakSearch::Exact)?.rates));
    }
    let (set, rate) = state
        .densest_set()
        .ok_or_else(|| Error::Internal("no peak set in a non-empty snapshot".into()))?;
    if !set.members.contains(&0) {
        return Err(Error::Internal(
            "snapshot peak set does not start at the first interval".into(),
        ));
    }
    state.allocate_rates(&set, rate)?;
    Ok(first(&state.rates))
}

/// Result of [`solve_offline`].
#[derive(Debug, Clone, PartialEq)]
pub struct OfflineSolution {
    pub decomposition: IntervalDecomposition,
    pub schedule: RateSchedule,
    /// $
    pub cost: f64,
    pub peaks: Vec<PeakStep>,
}

/// Globally optimal schedule for a fully known set of requests.
pub fn solve_offline(requests: &[ChargingRequest], cost: &CostModel) -> Result<OfflineSolution> {
    solve_offline_with(requests, cost, PeakSearch::Exact)
}

pub fn solve_offline_with(
    requests: &[ChargingRequest],
    cost: &CostModel,
    search: PeakSearch,
) -> Result<OfflineSolution> {
    cost.validate()?;
    validate_requests(requests)?;
    let decomposition = decompose_intervals(requests);
    let problem = Problem::from_decomposition(&decomposition, requests);
    let solution = solve_problem(&problem, search)?;
    let entries = requests
        .iter()
        .zip(solution.rates)
        .enumerate()
        .map(|(pos, (r, rates))| RequestRates {
            id: r.id,
            first_interval: decomposition.span(pos).start,
            rates,
        })
        .collect();
    let schedule = RateSchedule::with_totals(entries, solution.totals)?;
    let total_cost = evaluate_cost(&schedule, &decomposition, cost)?;
    Ok(OfflineSolution {
        decomposition,
        schedule,
        cost: total_cost,
        peaks: solution.peaks,
    })
}
