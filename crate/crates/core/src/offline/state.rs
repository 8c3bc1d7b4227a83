use crate::error::{Error, Result};

use super::solver::PeakStep;
use super::Problem;

/// A candidate set of open intervals.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalSet {
    /// First and last open interval of the window the set was drawn from.
    pub window: (usize, usize),
    /// Member interval indices, in the order they were added.
    pub members: Vec<usize>,
    /// Sum of member lengths, hours.
    pub total_length: f64,
}

impl IntervalSet {
    pub fn new(window: (usize, usize), members: Vec<usize>, lengths: &[f64]) -> Self {
        let total_length = members.iter().map(|&k| lengths[k]).sum();
        IntervalSet {
            window,
            members,
            total_length,
        }
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

/// Working state of the iterative solver.
#[derive(Debug, Clone)]
pub struct SolverState<'p> {
    pub(super) problem: &'p Problem,
    pub(super) active_jobs: Vec<bool>,
    pub(super) active_intervals: Vec<bool>,
    /// Rate committed to each interval by jobs scheduled in earlier iterations.
    pub(super) carried: Vec<f64>,
    /// Per job, one rate per interval of its span.
    pub(super) rates: Vec<Vec<f64>>,
    pub(super) frozen: Vec<Option<f64>>,
    /// Per job, total length of its still-open intervals.
    pub(super) open_length: Vec<f64>,
    pub(super) iteration: usize,
    pub(super) peaks: Vec<PeakStep>,
}

impl<'p> SolverState<'p> {
    /// Zero-demand jobs start out scheduled at rate zero.
    pub fn new(problem: &'p Problem) -> Self {
        let jobs = problem.jobs();
        SolverState {
            problem,
            active_jobs: jobs.iter().map(|j| j.demand > 0.0).collect(),
            active_intervals: vec![true; problem.num_intervals()],
            carried: vec![0.0; problem.num_intervals()],
            rates: jobs.iter().map(|j| vec![0.0; j.span.len()]).collect(),
            frozen: vec![None; problem.num_intervals()],
            open_length: jobs
                .iter()
                .map(|j| problem.lengths()[j.span.clone()].iter().sum())
                .collect(),
            iteration: 0,
            peaks: Vec::new(),
        }
    }

    pub fn problem(&self) -> &'p Problem {
        self.problem
    }

    pub fn iteration(&self) -> usize {
        self.iteration
    }

    pub fn is_job_active(&self, j: usize) -> bool {
        self.active_jobs[j]
    }

    pub fn is_interval_active(&self, k: usize) -> bool {
        self.active_intervals[k]
    }

    pub fn active_jobs(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.active_jobs.len()).filter(|&j| self.active_jobs[j])
    }

    pub fn active_intervals(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.active_intervals.len()).filter(|&k| self.active_intervals[k])
    }

    /// Rate already committed to interval `k` by scheduled jobs, kW.
    pub fn carried_rate(&self, k: usize) -> f64 {
        self.carried[k]
    }

    /// Total rate of interval `k` if it has been frozen.
    pub fn frozen_rate(&self, k: usize) -> Option<f64> {
        self.frozen[k]
    }

    /// Rates of job `j` over its span.
    pub fn rates(&self, j: usize) -> &[f64] {
        &self.rates[j]
    }

    pub fn peaks(&self) -> &[PeakStep] {
        &self.peaks
    }

    pub fn is_done(&self) -> bool {
        !self.active_jobs.iter().any(|&a| a)
    }

    /// Upper bound on the total rate of open interval `k`: the committed
    /// rate plus `min(U_i, D_i / delta_k)` over the active jobs parked there.
    pub fn intensity(&self, k: usize) -> f64 {
        let len = self.problem.lengths()[k];
        self.carried[k]
            + self
                .problem
                .parked(k)
                .iter()
                .filter(|&&j| self.active_jobs[j])
                .map(|&j| {
                    let job = &self.problem.jobs()[j];
                    job.max_rate.min(job.demand / len)
                })
                .sum::<f64>()
    }

    pub(super) fn membership(&self, set: &IntervalSet) -> Vec<bool> {
        let mut mask = vec![false; self.problem.num_intervals()];
        for &k in &set.members {
            mask[k] = true;
        }
        mask
    }

    /// Open length of job `j`'s span inside `mask`.
    pub(super) fn overlap(&self, j: usize, mask: &[bool]) -> f64 {
        let job = &self.problem.jobs()[j];
        job.span
            .clone()
            .filter(|&k| mask[k] && self.active_intervals[k])
            .map(|k| self.problem.lengths()[k])
            .sum()
    }

    /// `D_j - U_j * (open span length outside the set)`.
    pub(super) fn residual_with_overlap(&self, j: usize, overlap: f64) -> f64 {
        let job = &self.problem.jobs()[j];
        job.demand - job.max_rate * (self.open_length[j] - overlap)
    }

    /// Demand left for job `j` on `set` after charging at its cap on every
    /// open interval of its span outside the set. May be negative.
    pub fn residual_demand(&self, j: usize, set: &IntervalSet) -> Result<f64> {
        let mask = self.membership(set);
        let job = &self.problem.jobs()[j];
        if !job.span.clone().any(|k| mask[k] && self.active_intervals[k]) {
            return Err(Error::Domain(format!(
                "job {j} does not park in any member of the interval set"
            )));
        }
        Ok(self.residual_with_overlap(j, self.overlap(j, &mask)))
    }

    /// Jobs that are active and park in at least one member of `mask`.
    pub(super) fn overlapping_jobs(&self, members: &[usize]) -> Vec<usize> {
        let mut seen = vec![false; self.active_jobs.len()];
        let mut out = Vec::new();
        for &k in members {
            for &j in self.problem.parked(k) {
                if self.active_jobs[j] && !seen[j] {
                    seen[j] = true;
                    out.push(j);
                }
            }
        }
        out.sort_unstable();
        out
    }

    /// Total rate obtained by spreading the clamped residual demand of
    /// every overlapping job (each counted once), plus the committed rate,
    /// evenly over the set.
    pub fn balanced_rate(&self, set: &IntervalSet) -> f64 {
        if set.total_length <= 0.0 {
            return 0.0;
        }
        let mask = self.membership(set);
        let residual: f64 = self
            .overlapping_jobs(&set.members)
            .into_iter()
            .map(|j| self.residual_with_overlap(j, self.overlap(j, &mask)).max(0.0))
            .sum();
        let committed: f64 = set
            .members
            .iter()
            .map(|&k| self.carried[k] * self.problem.lengths()[k])
            .sum();
        (residual + committed) / set.total_length
    }
}
