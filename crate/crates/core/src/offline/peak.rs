//! Peak interval-set search: the window/intensity-prefix enumeration and
//! an exact densest-set search used by the solver.

use std::cmp::Ordering;

use crate::intervals::IntervalDecomposition;
use crate::model::ChargingRequest;

use super::flow::FlowNetwork;
use super::state::{IntervalSet, SolverState};

const RATE_TIE: f64 = 1e-12;

/// `sum_{i parked in k} min(U_i, D_i / delta_k)` on the original instance.
pub fn intensity(decomp: &IntervalDecomposition, requests: &[ChargingRequest], k: usize) -> f64 {
    let len = decomp.length(k);
    decomp
        .parked(k)
        .iter()
        .map(|&p| requests[p].max_rate.min(requests[p].demand / len))
        .sum()
}

fn nearly_equal(a: f64, b: f64) -> bool {
    (a - b).abs() <= RATE_TIE * a.abs().max(b.abs()).max(1.0)
}

/// Candidate order: higher rate, then longer, then earlier window, then fewer members.
fn compare_candidates(a: &(IntervalSet, f64), b: &(IntervalSet, f64)) -> Ordering {
    if !nearly_equal(a.1, b.1) {
        return a.1.partial_cmp(&b.1).unwrap_or(Ordering::Equal);
    }
    if !nearly_equal(a.0.total_length, b.0.total_length) {
        return a
            .0
            .total_length
            .partial_cmp(&b.0.total_length)
            .unwrap_or(Ordering::Equal);
    }
    b.0.window
        .0
        .cmp(&a.0.window.0)
        .then(b.0.members.len().cmp(&a.0.members.len()))
}

impl SolverState<'_> {
    fn open_order(&self) -> Vec<usize> {
        self.active_intervals().collect()
    }

    /// Enumerates every time window over the open timeline (from some
    /// active job's first open interval to some active job's last open
    /// interval) and, inside each window, every prefix of its intervals
    /// sorted by descending intensity. Returns the candidate with the
    /// highest balanced rate; ties go to the longer set, then the earlier
    /// window, then the set with fewer intervals.
    pub fn select_peak_set(&self) -> Option<(IntervalSet, f64)> {
        let open = self.open_order();
        if open.is_empty() || self.is_done() {
            return None;
        }
        let problem = self.problem;
        let lengths = problem.lengths();
        let mut pos_of = vec![usize::MAX; problem.num_intervals()];
        for (p, &k) in open.iter().enumerate() {
            pos_of[k] = p;
        }

        let mut starts = Vec::new();
        let mut ends = Vec::new();
        for j in self.active_jobs() {
            let span = problem.jobs()[j].span.clone();
            let mut first = None;
            let mut last = None;
            for k in span.filter(|&k| self.active_intervals[k]) {
                first.get_or_insert(pos_of[k]);
                last = Some(pos_of[k]);
            }
            if let (Some(f), Some(l)) = (first, last) {
                starts.push(f);
                ends.push(l);
            }
        }
        starts.sort_unstable();
        starts.dedup();
        ends.sort_unstable();
        ends.dedup();

        let rho: Vec<f64> = (0..problem.num_intervals())
            .map(|k| {
                if self.active_intervals[k] {
                    self.intensity(k)
                } else {
                    0.0
                }
            })
            .collect();

        let njobs = problem.jobs().len();
        let mut overlap = vec![0.0; njobs];
        let mut stamp = vec![usize::MAX; njobs];
        let mut best: Option<(IntervalSet, f64)> = None;
        let mut window_id = 0usize;

        for &a in &starts {
            for &e in ends.iter().filter(|&&e| e >= a) {
                window_id += 1;
                let mut order: Vec<usize> = open[a..=e].to_vec();
                order.sort_by(|&x, &y| rho[y].partial_cmp(&rho[x]).unwrap_or(Ordering::Equal).then(x.cmp(&y)));

                let mut touched: Vec<usize> = Vec::new();
                let mut committed = 0.0;
                let mut length = 0.0;
                for (count, &k) in order.iter().enumerate() {
                    committed += self.carried[k] * lengths[k];
                    length += lengths[k];
                    for &j in problem.parked(k) {
                        if !self.active_jobs[j] {
                            continue;
                        }
                        if stamp[j] != window_id {
                            stamp[j] = window_id;
                            overlap[j] = 0.0;
                            touched.push(j);
                        }
                        overlap[j] += lengths[k];
                    }
                    let residual: f64 = touched
                        .iter()
                        .map(|&j| self.residual_with_overlap(j, overlap[j]).max(0.0))
                        .sum();
                    let rate = (residual + committed) / length;
                    let cand = (
                        IntervalSet {
                            window: (open[a], open[e]),
                            members: order[..=count].to_vec(),
                            total_length: length,
                        },
                        rate,
                    );
                    if best
                        .as_ref()
                        .is_none_or(|b| compare_candidates(&cand, b) == Ordering::Greater)
                    {
                        best = Some(cand);
                    }
                }
            }
        }
        best
    }

    /// True when every active job's open intervals begin at the first
    /// live interval, i.e. all spans are prefixes of the live timeline.
    /// Also requires no committed rate on those intervals.
    pub fn is_common_start(&self) -> bool {
        let live = self.live_intervals();
        let Some(&first) = live.first() else {
            return false;
        };
        live.iter().all(|&k| self.carried[k] == 0.0)
            && self.active_jobs().all(|j| self.problem.jobs()[j].span.contains(&first))
    }

    /// Open intervals where at least one active job is parked. Other open
    /// intervals keep their committed rate whatever happens next.
    pub fn live_intervals(&self) -> Vec<usize> {
        self.active_intervals()
            .filter(|&k| self.problem.parked(k).iter().any(|&j| self.active_jobs[j]))
            .collect()
    }

    /// Exact maximum-rate interval set over all subsets of live intervals.
    ///
    /// When all spans are prefixes and nothing is committed yet, the optimal
    /// totals are non-increasing in time, so only prefixes need checking. Otherwise
    /// the maximum is found by Dinkelbach iteration on a min-cut
    /// formulation. Among equally dense sets the largest is returned.
    pub fn densest_set(&self) -> Option<(IntervalSet, f64)> {
        if self.is_done() || self.live_intervals().is_empty() {
            return None;
        }
        if self.is_common_start() {
            self.densest_prefix()
        } else {
            self.densest_by_cut()
        }
    }

    fn densest_prefix(&self) -> Option<(IntervalSet, f64)> {
        let open = self.live_intervals();
        let lengths = self.problem.lengths();
        let jobs: Vec<usize> = self.active_jobs().collect();

        let mut best: Option<(usize, f64)> = None;
        let mut cum = 0.0;
        let mut committed = 0.0;
        for (p, &k) in open.iter().enumerate() {
            cum += lengths[k];
            committed += self.carried[k] * lengths[k];
            let residual: f64 = jobs
                .iter()
                .map(|&j| {
                    let open_len = self.open_length[j];
                    self.residual_with_overlap(j, cum.min(open_len)).max(0.0)
                })
                .sum();
            let rate = (residual + committed) / cum;
            // `>=` with tolerance keeps the longest of equally dense prefixes.
            if best.is_none_or(|(_, r)| rate > r || nearly_equal(rate, r)) {
                best = Some((p, rate));
            }
        }
        let (p, rate) = best?;
        let members = open[..=p].to_vec();
        let set = IntervalSet::new((open[0], open[p]), members, lengths);
        Some((set, rate))
    }

    fn densest_by_cut(&self) -> Option<(IntervalSet, f64)> {
        let open = self.live_intervals();
        let lengths = self.problem.lengths();
        let make = |members: Vec<usize>| {
            let window = (members[0], *members.last().unwrap());
            IntervalSet::new(window, members, lengths)
        };

        // Start from the best single interval.
        let mut best = open
            .iter()
            .map(|&k| {
                let set = make(vec![k]);
                let rate = self.balanced_rate(&set);
                (set, rate)
            })
            .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(Ordering::Equal))?;

        for _ in 0..200 {
            let lambda = best.1;
            let members = self.cut_maximizer(lambda, &open);
            if members.is_empty() {
                break;
            }
            let set = make(members);
            let rate = self.balanced_rate(&set);
            let scale = lambda.abs().max(1.0);
            if rate > lambda + RATE_TIE * scale {
                best = (set, rate);
                continue;
            }
            // At the optimum the maximal cut side is the largest densest set.
            if rate >= lambda - 1e-10 * scale && set.len() > best.0.len() {
                best = (set, rate);
            }
            break;
        }
        Some(best)
    }

    /// Largest set maximising `sum_j max(0, D_j(K)) + sum_{k in K} (carried_k - lambda) * delta_k`.
    fn cut_maximizer(&self, lambda: f64, open: &[usize]) -> Vec<usize> {
        let problem = self.problem;
        let lengths = problem.lengths();
        let jobs: Vec<usize> = self.active_jobs().collect();
        let (s, t) = (0, 1);
        let job_node = |idx: usize| 2 + idx;
        let base = 2 + jobs.len();
        let mut interval_node = vec![usize::MAX; problem.num_intervals()];
        for (p, &k) in open.iter().enumerate() {
            interval_node[k] = base + p;
        }

        let eps = 1e-12 * problem.energy_scale();
        let mut net = FlowNetwork::new(base + open.len(), eps);
        for (idx, &j) in jobs.iter().enumerate() {
            let job = &problem.jobs()[j];
            net.add_edge(s, job_node(idx), job.demand);
            for k in job.span.clone().filter(|&k| self.active_intervals[k]) {
                net.add_edge(job_node(idx), interval_node[k], job.max_rate * lengths[k]);
            }
        }
        for &k in open {
            let weight = (lambda - self.carried[k]) * lengths[k];
            if weight > 0.0 {
                net.add_edge(interval_node[k], t, weight);
            } else if weight < 0.0 {
                net.add_edge(s, interval_node[k], -weight);
            }
        }
        net.max_flow(s, t);
        let side = net.maximal_source_side(t);
        open.iter().copied().filter(|&k| side[interval_node[k]]).collect()
    }
}
