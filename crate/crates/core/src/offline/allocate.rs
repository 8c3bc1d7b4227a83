//! Per-request rate allocation inside a frozen peak set.

use crate::error::{Error, Result};

use super::flow::FlowNetwork;
use super::solver::PeakStep;
use super::state::{IntervalSet, SolverState};

/// Lazily evaluated allocation strategy.
type Attempt<'a> = Box<dyn Fn() -> Option<Vec<Vec<f64>>> + 'a>;

/// How the rates inside a peak set were obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AllocationMethod {
    /// Headroom-proportional closed form.
    ClosedForm,
    /// Backward laxity levelling, valid when all spans are prefixes of the set.
    Levelling,
    /// Max-flow fallback for general overlap patterns.
    Flow,
    /// Every selected job is pinned at its cap.
    Saturated,
}

/// Allocation problem restricted to one peak set.
struct Inside {
    /// Members in time order.
    members: Vec<usize>,
    lengths: Vec<f64>,
    /// Energy each member must receive from the selected jobs.
    targets: Vec<f64>,
    /// Selected jobs with their residual demand.
    jobs: Vec<(usize, f64)>,
    /// Per selected job, positions (into `members`) it parks in.
    presence: Vec<Vec<usize>>,
    caps: Vec<f64>,
    tol: f64,
}

impl Inside {
    /// Checks energies, totals and bounds; clamps rounding noise in place.
    fn accept(&self, rates: &mut [Vec<f64>]) -> bool {
        let mut filled = vec![0.0; self.members.len()];
        for (idx, (_, residual)) in self.jobs.iter().enumerate() {
            let cap = self.caps[idx];
            let mut energy = 0.0;
            for (slot, &p) in self.presence[idx].iter().enumerate() {
                let x = rates[idx][slot];
                if !(x >= -self.tol && x <= cap + self.tol) {
                    return false;
                }
                energy += x * self.lengths[p];
                filled[p] += x * self.lengths[p];
            }
            if (energy - residual).abs() > self.tol {
                return false;
            }
        }
        if filled.iter().zip(&self.targets).any(|(f, t)| (f - t).abs() > self.tol) {
            return false;
        }
        for (idx, row) in rates.iter_mut().enumerate() {
            for x in row.iter_mut() {
                *x = x.clamp(0.0, self.caps[idx]);
            }
        }
        true
    }

    fn closed_form(&self, rate: f64, carried: &[f64]) -> Option<Vec<Vec<f64>>> {
        let delta: f64 = self.lengths.iter().sum();
        let denom: f64 = self
            .jobs
            .iter()
            .zip(&self.caps)
            .map(|(&(_, r), &u)| u * delta - r)
            .sum();
        if denom <= self.tol {
            return None;
        }
        let mut cap_sum = vec![0.0; self.members.len()];
        for (idx, presence) in self.presence.iter().enumerate() {
            for &p in presence {
                cap_sum[p] += self.caps[idx];
            }
        }
        let rates = self
            .jobs
            .iter()
            .enumerate()
            .map(|(idx, &(_, r))| {
                let u = self.caps[idx];
                self.presence[idx]
                    .iter()
                    .map(|&p| u - (u * delta - r) * (cap_sum[p] - (rate - carried[p])) / denom)
                    .collect()
            })
            .collect();
        Some(rates)
    }

    fn saturated(&self) -> Vec<Vec<f64>> {
        self.presence
            .iter()
            .zip(&self.caps)
            .map(|(p, &u)| vec![u; p.len()])
            .collect()
    }

    /// Walks the set backwards in time. At each member the available
    /// energy is spent on the jobs needing the longest time at full rate,
    /// levelling `remaining / cap` from the top. This minimises the forced
    /// load on every earlier prefix at once, so it never strands a job when
    /// spans are prefixes of the set.
    fn levelling(&self) -> Option<Vec<Vec<f64>>> {
        let m = self.members.len();
        let first = |idx: usize| self.presence[idx].first().copied();
        // Every span must be a contiguous run starting at position 0.
        for (idx, pres) in self.presence.iter().enumerate() {
            if first(idx) != Some(0) || pres.iter().enumerate().any(|(i, &p)| i != p) {
                return None;
            }
        }
        let mut remaining: Vec<f64> = self.jobs.iter().map(|&(_, r)| r.max(0.0)).collect();
        let mut rates: Vec<Vec<f64>> = self.presence.iter().map(|p| vec![0.0; p.len()]).collect();
        let mut events: Vec<(f64, f64)> = Vec::new();

        for p in (0..m).rev() {
            let len = self.lengths[p];
            let target = self.targets[p];
            let avail: Vec<usize> = (0..self.jobs.len())
                .filter(|&idx| self.presence[idx].len() > p && remaining[idx] > 0.0)
                .collect();
            if target <= 0.0 {
                continue;
            }
            // f(theta) = sum_j U_j * clamp(tau_j - theta, 0, len), decreasing in theta.
            events.clear();
            for &idx in &avail {
                let tau = remaining[idx] / self.caps[idx];
                events.push((tau, self.caps[idx]));
                events.push((tau - len, -self.caps[idx]));
            }
            events.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
            let mut theta = f64::INFINITY;
            let mut slope = 0.0;
            let mut filled = 0.0;
            let mut level = None;
            for &(point, dslope) in &events {
                let point = point.max(0.0);
                if theta.is_finite() && point < theta {
                    let gain = slope * (theta - point);
                    if filled + gain >= target {
                        level = Some(theta - (target - filled) / slope);
                        break;
                    }
                    filled += gain;
                }
                theta = theta.min(point);
                slope += dslope;
            }
            let theta = match level {
                Some(t) => t,
                // Ran out of breakpoints: everything available is used.
                None if (target - filled).abs() <= self.tol => 0.0,
                None => return None,
            };
            for &idx in &avail {
                let tau = remaining[idx] / self.caps[idx];
                let energy = self.caps[idx] * (tau - theta).clamp(0.0, len);
                remaining[idx] -= energy;
                rates[idx][p] = energy / len;
            }
        }
        remaining.iter().all(|r| r.abs() <= self.tol).then_some(rates)
    }

    fn flow(&self) -> Option<Vec<Vec<f64>>> {
        let (s, t) = (0, 1);
        let base = 2 + self.jobs.len();
        let mut net = FlowNetwork::new(base + self.members.len(), self.tol * 1e-3);
        let mut handles: Vec<Vec<usize>> = Vec::with_capacity(self.jobs.len());
        for (idx, &(_, r)) in self.jobs.iter().enumerate() {
            net.add_edge(s, 2 + idx, r.max(0.0));
            handles.push(
                self.presence[idx]
                    .iter()
                    .map(|&p| net.add_edge(2 + idx, base + p, self.caps[idx] * self.lengths[p]))
                    .collect(),
            );
        }
        for (p, &target) in self.targets.iter().enumerate() {
            net.add_edge(base + p, t, target.max(0.0));
        }
        let total: f64 = self.jobs.iter().map(|&(_, r)| r.max(0.0)).sum();
        let flow = net.max_flow(s, t);
        if (flow - total).abs() > self.tol {
            return None;
        }
        Some(
            handles
                .iter()
                .zip(&self.presence)
                .map(|(hs, pres)| {
                    hs.iter()
                        .zip(pres)
                        .map(|(&h, &p)| net.flow(h) / self.lengths[p])
                        .collect()
                })
                .collect(),
        )
    }
}

impl SolverState<'_> {
    /// Freezes `set` at total rate `rate` and schedules every job whose
    /// residual demand on the set is non-negative: inside the set it gets
    /// its share of the balanced rate, on its other open intervals its cap.
    /// Other jobs parked in the set get rate zero there and stay active.
    pub fn allocate_rates(&mut self, set: &IntervalSet, rate: f64) -> Result<AllocationMethod> {
        let problem = self.problem;
        let lengths = problem.lengths();
        let mut members = set.members.clone();
        members.sort_unstable();
        if members.iter().any(|&k| !self.active_intervals[k]) {
            return Err(Error::Internal("peak set contains a frozen interval".into()));
        }
        let mask = self.membership(set);
        let tol = 1e-9 * problem.energy_scale();

        let mut selected = Vec::new();
        for j in self.overlapping_jobs(&members) {
            let residual = self.residual_with_overlap(j, self.overlap(j, &mask));
            if residual >= -tol {
                selected.push((j, residual.max(0.0)));
            }
        }
        let pos_of = |k: usize| members.binary_search(&k).ok();
        let presence: Vec<Vec<usize>> = selected
            .iter()
            .map(|&(j, _)| problem.jobs()[j].span.clone().filter_map(pos_of).collect())
            .collect();
        let carried: Vec<f64> = members.iter().map(|&k| self.carried[k]).collect();
        let inside = Inside {
            lengths: members.iter().map(|&k| lengths[k]).collect(),
            targets: members.iter().map(|&k| (rate - self.carried[k]) * lengths[k]).collect(),
            caps: selected.iter().map(|&(j, _)| problem.jobs()[j].max_rate).collect(),
            members: members.clone(),
            jobs: selected.clone(),
            presence,
            tol,
        };

        let total_headroom: f64 = inside
            .jobs
            .iter()
            .zip(&inside.caps)
            .map(|(&(_, r), &u)| u * set.total_length - r)
            .sum();
        let attempts: [(AllocationMethod, Attempt); 4] = [
            (
                AllocationMethod::Saturated,
                Box::new(|| (total_headroom.abs() <= tol).then(|| inside.saturated())),
            ),
            (
                AllocationMethod::ClosedForm,
                Box::new(|| inside.closed_form(rate, &carried)),
            ),
            (AllocationMethod::Levelling, Box::new(|| inside.levelling())),
            (AllocationMethod::Flow, Box::new(|| inside.flow())),
        ];
        let mut chosen = None;
        for (method, attempt) in attempts.iter() {
            if let Some(mut rates) = attempt() {
                if inside.accept(&mut rates) {
                    chosen = Some((*method, rates));
                    break;
                }
            }
        }
        let Some((method, inner_rates)) = chosen else {
            return Err(Error::Internal(format!(
                "no allocation inside peak set at iteration {} reproduces rate {rate}",
                self.iteration
            )));
        };

        for (idx, &(j, _)) in selected.iter().enumerate() {
            let span = problem.jobs()[j].span.clone();
            let u = problem.jobs()[j].max_rate;
            let mut slot = 0;
            for k in span.clone() {
                let at = k - span.start;
                if mask[k] {
                    self.rates[j][at] = inner_rates[idx][slot];
                    slot += 1;
                } else if self.active_intervals[k] {
                    self.rates[j][at] = u;
                    self.carried[k] += u;
                }
            }
            self.active_jobs[j] = false;
        }
        for &k in &members {
            self.active_intervals[k] = false;
            self.frozen[k] = Some(rate);
            for &j in problem.parked(k) {
                self.open_length[j] -= lengths[k];
            }
        }
        self.peaks.push(PeakStep {
            iteration: self.iteration,
            members,
            total_length: set.total_length,
            rate,
            scheduled: selected.iter().map(|&(j, _)| j).collect(),
            method,
        });
        self.iteration += 1;
        Ok(method)
    }
}
