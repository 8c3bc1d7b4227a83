//! Offline optimal scheduling by iterative peak-set extraction.
//!
//! The solver repeatedly finds the set of still-open intervals whose
//! balanced total rate is highest, freezes those intervals at that rate,
//! and schedules every request whose residual demand on the set is
//! non-negative. Peak rates are non-increasing across iterations and the
//! result satisfies the KKT conditions of the quadratic program.

mod allocate;
pub(crate) mod flow;
mod kkt;
mod oracle;
mod peak;
mod solver;
mod state;

use std::ops::Range;

pub use allocate::AllocationMethod;
pub use kkt::{verify_kkt, verify_kkt_problem, KktReport, KKT_TOL};
pub use oracle::{oracle_solve, oracle_solve_problem, ORACLE_MAX_PASSES, ORACLE_TOL};
pub use peak::intensity;
pub use solver::{
    first_interval_rates, solve_offline, solve_offline_with, solve_problem, OfflineSolution, PeakSearch, PeakStep,
    ProblemSolution,
};
pub use state::{IntervalSet, SolverState};

use crate::intervals::IntervalDecomposition;
use crate::model::ChargingRequest;

/// A request as the solver sees it: energy, rate cap and interval span.
#[derive(Debug, Clone, PartialEq)]
pub struct Job {
    /// kWh
    pub demand: f64,
    /// kW
    pub max_rate: f64,
    pub span: Range<usize>,
}

/// The discrete problem: interval lengths plus jobs over contiguous spans.
#[derive(Debug, Clone, PartialEq)]
pub struct Problem {
    lengths: Vec<f64>,
    jobs: Vec<Job>,
    parked: Vec<Vec<usize>>,
}

impl Problem {
    pub fn new(lengths: Vec<f64>, jobs: Vec<Job>) -> Self {
        let mut parked = vec![Vec::new(); lengths.len()];
        for (j, job) in jobs.iter().enumerate() {
            assert!(job.span.end <= lengths.len(), "job span past last interval");
            for k in job.span.clone() {
                parked[k].push(j);
            }
        }
        Problem { lengths, jobs, parked }
    }

    pub fn from_decomposition(decomp: &IntervalDecomposition, requests: &[ChargingRequest]) -> Self {
        let jobs = requests
            .iter()
            .enumerate()
            .map(|(pos, r)| Job {
                demand: r.demand,
                max_rate: r.max_rate,
                span: decomp.span(pos),
            })
            .collect();
        Problem::new(decomp.lengths().to_vec(), jobs)
    }

    pub fn lengths(&self) -> &[f64] {
        &self.lengths
    }

    pub fn jobs(&self) -> &[Job] {
        &self.jobs
    }

    pub fn parked(&self, k: usize) -> &[usize] {
        &self.parked[k]
    }

    pub fn num_intervals(&self) -> usize {
        self.lengths.len()
    }

    /// Scale for absolute tolerances: the largest single-interval energy
    /// any job could move, floored at 1.
    pub(crate) fn energy_scale(&self) -> f64 {
        self.jobs
            .iter()
            .map(|j| {
                j.demand
                    .max(j.max_rate * self.lengths[j.span.clone()].iter().sum::<f64>())
            })
            .fold(1.0, f64::max)
    }
}

#[cfg(test)]
mod tests;
