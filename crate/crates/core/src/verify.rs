//! Randomised self-check suites over small instances.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::Result;
use crate::model::{ChargingRequest, CostModel, RequestId};
use crate::offline::{oracle_solve, solve_offline, verify_kkt, KKT_TOL, ORACLE_TOL};
use crate::online::{oa_rates, orchard_rates, run_online, AlgorithmKind, OnlineRun, OnlineState, DEFAULT_Q};
use crate::schedule::{evaluate_cost, validate_schedule, DEMAND_TOL};
use crate::time::TimeStamp;

/// A random feasible instance with `1..=max_n` requests.
///
/// Arrivals fall in `[0, 12)` h and parking lasts `0.1..8` h, both on a
/// 0.05 h grid; rates and capacities are drawn independently, demand is
/// uniform up to the deliverable energy.
pub fn random_instance<R: Rng>(rng: &mut R, max_n: usize) -> Vec<ChargingRequest> {
    let n = rng.random_range(1..=max_n.max(1));
    (0..n)
        .map(|i| {
            let arrival = TimeStamp::from_ticks(50 * rng.random_range(0..240u64));
            let deadline = arrival + 50 * rng.random_range(2..=160u64);
            let max_rate = rng.random_range(0.5..4.0);
            let capacity = rng.random_range(5.0..40.0);
            let limit = (max_rate * arrival.hours_until(deadline)).min(capacity);
            let demand = rng.random_range(0.0..=1.0) * limit;
            ChargingRequest::new(RequestId(i as u32), arrival, deadline, demand, max_rate, capacity)
                .expect("generated request is well formed")
        })
        .collect()
}

/// Outcome of an offline check suite.
#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport {
    pub suite: String,
    pub instances: usize,
    pub failures: usize,
    /// Largest KKT violation (kW), relative cost gap, or ORCHARD ratio,
    /// depending on the suite.
    pub worst: f64,
    /// Seed of the first failing instance.
    pub first_failure: Option<u64>,
}

impl SuiteReport {
    fn new(suite: &str) -> Self {
        SuiteReport {
            suite: suite.to_string(),
            instances: 0,
            failures: 0,
            worst: 0.0,
            first_failure: None,
        }
    }

    fn record(&mut self, seed: u64, value: f64, ok: bool) {
        self.instances += 1;
        self.worst = self.worst.max(value);
        if !ok {
            self.failures += 1;
            self.first_failure.get_or_insert(seed);
        }
    }

    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

fn instance_seed(seed: u64, i: usize) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(i as u64)
}

/// Solves `count` random instances and checks KKT, demand exactness and
/// monotone peak rates.
pub fn kkt_suite(count: usize, seed: u64, max_n: usize) -> Result<SuiteReport> {
    let cost = CostModel::REFERENCE;
    let mut report = SuiteReport::new("kkt");
    for i in 0..count {
        let s = instance_seed(seed, i);
        let requests = random_instance(&mut ChaCha8Rng::seed_from_u64(s), max_n);
        let sol = solve_offline(&requests, &cost)?;
        let kkt = verify_kkt(&sol.schedule, &requests, &sol.decomposition, KKT_TOL)?;
        let feas = validate_schedule(&sol.schedule, &requests, &sol.decomposition, DEMAND_TOL)?;
        let monotone = sol.peaks.windows(2).all(|w| w[1].rate <= w[0].rate + 1e-9);
        report.record(s, kkt.max_violation(), kkt.passed && feas.feasible && monotone);
    }
    Ok(report)
}

/// Compares solver cost against the reference solver on `count` instances.
pub fn oracle_suite(count: usize, seed: u64, max_n: usize) -> Result<SuiteReport> {
    let cost = CostModel::REFERENCE;
    let mut report = SuiteReport::new("oracle");
    for i in 0..count {
        let s = instance_seed(seed, i);
        let requests = random_instance(&mut ChaCha8Rng::seed_from_u64(s), max_n);
        let sol = solve_offline(&requests, &cost)?;
        let reference = oracle_solve(&requests, &cost, ORACLE_TOL)?;
        let ref_cost = evaluate_cost(&reference, &sol.decomposition, &cost)?;
        let gap = if ref_cost > 0.0 {
            (sol.cost - ref_cost).abs() / ref_cost
        } else {
            sol.cost.abs()
        };
        report.record(s, gap, gap <= 1e-3);
    }
    Ok(report)
}

/// Proven worst-case ratio of ORCHARD at the default speed-up.
pub const ORCHARD_BOUND: f64 = 2.39;

/// Runs every online policy on `count` random instances and checks that
/// demands are met, energy is conserved along the trace, online cost is at
/// least the offline optimum, ORCHARD(1.46) stays within its bound, ORCHARD
/// dominates OA rate by rate, and ORCHARD(1) replays OA exactly.
pub fn online_suite(count: usize, seed: u64, max_n: usize) -> Result<SuiteReport> {
    let cost = CostModel::REFERENCE;
    let mut report = SuiteReport::new("online-invariants");
    for i in 0..count {
        let s = instance_seed(seed, i);
        let requests = random_instance(&mut ChaCha8Rng::seed_from_u64(s), max_n);
        let offline = solve_offline(&requests, &cost)?.cost;
        let mut ok = true;
        let mut orchard_ratio = 1.0;
        let mut oa_run = None;
        for algo in [
            AlgorithmKind::Oa,
            AlgorithmKind::Orchard { q: DEFAULT_Q },
            AlgorithmKind::Orchard { q: 1.0 },
            AlgorithmKind::Avg,
            AlgorithmKind::Eg,
        ] {
            let run = run_online(&requests, &cost, algo)?;
            ok &= delivers_all(&run, &requests) && conserves_energy(&run);
            ok &= run.total_cost >= offline - 1e-9;
            match algo {
                AlgorithmKind::Oa => oa_run = Some(run),
                AlgorithmKind::Orchard { q: 1.0 } => {
                    ok &= oa_run.as_ref().is_some_and(|oa| oa.trace == run.trace);
                }
                AlgorithmKind::Orchard { .. } => {
                    orchard_ratio = crate::sim::cost_ratio(run.total_cost, offline);
                    ok &= orchard_ratio <= ORCHARD_BOUND;
                }
                _ => {}
            }
        }
        ok &= orchard_dominates_oa(&requests)?;
        report.record(s, orchard_ratio, ok);
    }
    Ok(report)
}

fn delivers_all(run: &OnlineRun, requests: &[ChargingRequest]) -> bool {
    requests
        .iter()
        .zip(&run.delivered)
        .all(|(r, (id, d))| *id == r.id && (r.demand - d).abs() <= DEMAND_TOL)
}

/// Per-segment totals match their rates, and the trace integrates to the
/// delivered energy.
fn conserves_energy(run: &OnlineRun) -> bool {
    let mut energy: std::collections::HashMap<RequestId, f64> = Default::default();
    for seg in &run.trace {
        let sum: f64 = seg.rates.iter().map(|(_, x)| x).sum();
        if (sum - seg.total_kw).abs() > 1e-9 * sum.max(1.0) {
            return false;
        }
        for &(id, x) in &seg.rates {
            *energy.entry(id).or_default() += x * (seg.t_end_h - seg.t_start_h);
        }
    }
    run.delivered
        .iter()
        .all(|(id, d)| (energy.get(id).copied().unwrap_or(0.0) - d).abs() <= 1e-9 * d.max(1.0))
}

/// At each arrival instant, with everyone present still owing their full
/// demand, ORCHARD's rates are at least OA's, within the caps, and sum to
/// `min(q * sum(OA), sum(U))`.
fn orchard_dominates_oa(requests: &[ChargingRequest]) -> Result<bool> {
    let mut order: Vec<&ChargingRequest> = requests.iter().collect();
    order.sort_by_key(|r| (r.arrival, r.id));
    for r in &order {
        let now = r.arrival.hours();
        let mut state = OnlineState::new(now);
        for o in order
            .iter()
            .filter(|o| o.arrival <= r.arrival && o.deadline > r.arrival)
        {
            if o.demand <= o.max_rate * (o.deadline.hours() - now) {
                state.admit(o);
            }
        }
        let xbar = oa_rates(now, &state.present)?;
        let caps: Vec<f64> = state.present.iter().map(|p| p.max_rate).collect();
        let xhat = orchard_rates(&xbar, &caps, DEFAULT_Q);
        let target = (DEFAULT_Q * xbar.iter().sum::<f64>()).min(caps.iter().sum());
        let tol = 1e-9 * target.max(1.0);
        if (xhat.iter().sum::<f64>() - target).abs() > tol
            || xhat
                .iter()
                .zip(&xbar)
                .zip(&caps)
                .any(|((h, b), u)| *h < b - tol || *h > u + tol)
        {
            return Ok(false);
        }
    }
    Ok(true)
}
