use approx::assert_abs_diff_eq;

use super::*;
use crate::intervals::decompose_intervals;
use crate::model::{CostModel, RequestId};
use crate::schedule::{evaluate_cost, RateSchedule, RequestRates};
use crate::time::TimeStamp;

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

fn job(demand: f64, max_rate: f64, span: std::ops::Range<usize>) -> Job {
    Job { demand, max_rate, span }
}

fn set_of(members: &[usize], lengths: &[f64]) -> IntervalSet {
    IntervalSet::new((members[0], *members.last().unwrap()), members.to_vec(), lengths)
}

fn two_pev() -> Vec<ChargingRequest> {
    vec![req(1, 0.0, 2.0, 2.0, 2.0), req(2, 0.0, 4.0, 4.0, 2.0)]
}

fn tight() -> Vec<ChargingRequest> {
    vec![req(1, 0.0, 1.0, 2.0, 2.0), req(2, 0.0, 2.0, 1.0, 1.0)]
}

#[test]
fn intensity_examples() {
    let reqs = vec![req(1, 0.0, 2.0, 4.0, 3.3), req(2, 0.0, 2.0, 10.0, 1.4)];
    let d = decompose_intervals(&reqs);
    assert_abs_diff_eq!(intensity(&d, &reqs, 0), 3.4, epsilon = 1e-12);

    let reqs = vec![req(1, 0.0, 10.0, 4.0, 3.3)];
    let d = decompose_intervals(&reqs);
    assert_abs_diff_eq!(intensity(&d, &reqs, 0), 0.4, epsilon = 1e-12);

    let reqs = vec![req(1, 0.0, 1.0, 1.0, 3.3), req(2, 2.0, 3.0, 1.0, 3.3)];
    let d = decompose_intervals(&reqs);
    assert_eq!(intensity(&d, &reqs, 1), 0.0);
}

#[test]
fn residual_demand_examples() {
    let p = Problem::new(vec![2.0, 2.0], vec![job(5.0, 2.0, 0..2), job(3.0, 2.0, 0..2)]);
    let st = SolverState::new(&p);
    let first = set_of(&[0], p.lengths());
    assert_abs_diff_eq!(st.residual_demand(0, &first).unwrap(), 1.0, epsilon = 1e-12);
    assert_abs_diff_eq!(st.residual_demand(1, &first).unwrap(), -1.0, epsilon = 1e-12);
    let both = set_of(&[0, 1], p.lengths());
    assert_eq!(st.residual_demand(0, &both).unwrap(), 5.0);
}

#[test]
fn residual_demand_without_overlap_is_a_domain_error() {
    let p = Problem::new(vec![1.0, 1.0], vec![job(1.0, 2.0, 0..1), job(1.0, 2.0, 1..2)]);
    let st = SolverState::new(&p);
    let err = st.residual_demand(1, &set_of(&[0], p.lengths())).unwrap_err();
    assert!(matches!(err, crate::Error::Domain(_)));
}

#[test]
fn balanced_rate_examples() {
    let p = Problem::new(vec![4.0], vec![job(4.0, 3.3, 0..1)]);
    let st = SolverState::new(&p);
    assert_abs_diff_eq!(st.balanced_rate(&set_of(&[0], p.lengths())), 1.0, epsilon = 1e-12);

    let p = Problem::new(vec![2.0, 2.0], vec![job(2.0, 2.0, 0..1), job(4.0, 2.0, 0..2)]);
    let st = SolverState::new(&p);
    assert_abs_diff_eq!(st.balanced_rate(&set_of(&[0, 1], p.lengths())), 1.5, epsilon = 1e-12);

    let p = Problem::new(vec![2.0], vec![job(2.0, 3.0, 0..1)]);
    let mut st = SolverState::new(&p);
    st.carried[0] = 1.0;
    assert_abs_diff_eq!(st.balanced_rate(&set_of(&[0], p.lengths())), 2.0, epsilon = 1e-12);
}

#[test]
fn select_peak_set_single_interval() {
    let p = Problem::new(vec![4.0], vec![job(4.0, 3.3, 0..1)]);
    let (set, rate) = SolverState::new(&p).select_peak_set().unwrap();
    assert_eq!(set.members, vec![0]);
    assert_abs_diff_eq!(rate, 1.0, epsilon = 1e-12);
}

#[test]
fn select_peak_set_prefers_the_dense_interval() {
    let p = Problem::new(vec![1.0, 1.0], vec![job(2.0, 2.0, 0..1), job(1.0, 1.0, 0..2)]);
    let st = SolverState::new(&p);
    let (set, rate) = st.select_peak_set().unwrap();
    assert_eq!(set.members, vec![0]);
    assert_abs_diff_eq!(rate, 2.0, epsilon = 1e-12);
    let (exact, exact_rate) = st.densest_set().unwrap();
    assert_eq!(exact.members, vec![0]);
    assert_abs_diff_eq!(exact_rate, 2.0, epsilon = 1e-12);
}

#[test]
fn select_peak_set_tie_prefers_longer_set_then_earlier_window() {
    // Two disjoint unit loads: each alone and their union all balance at 1 kW.
    let p = Problem::new(vec![1.0, 1.0, 1.0], vec![job(1.0, 2.0, 0..1), job(1.0, 2.0, 2..3)]);
    let st = SolverState::new(&p);
    let (set, rate) = st.select_peak_set().unwrap();
    let mut members = set.members.clone();
    members.sort_unstable();
    assert_eq!(members, vec![0, 2]);
    assert_eq!(set.window, (0, 2));
    assert_abs_diff_eq!(rate, 1.0, epsilon = 1e-12);
    for _ in 0..3 {
        assert_eq!(st.select_peak_set().unwrap().0, set);
    }
}

#[test]
fn no_active_interval_ends_the_search() {
    let p = Problem::new(vec![1.0], vec![job(0.0, 2.0, 0..1)]);
    let st = SolverState::new(&p);
    assert!(st.is_done());
    assert!(st.select_peak_set().is_none());
    assert!(st.densest_set().is_none());
}

#[test]
fn allocate_single_pev() {
    let p = Problem::new(vec![4.0], vec![job(4.0, 3.3, 0..1)]);
    let mut st = SolverState::new(&p);
    let (set, rate) = st.densest_set().unwrap();
    st.allocate_rates(&set, rate).unwrap();
    assert_abs_diff_eq!(st.rates(0)[0], 1.0, epsilon = 1e-12);
    assert!(st.is_done());
    assert_eq!(st.frozen_rate(0), Some(1.0));
}

#[test]
fn allocate_dense_interval_then_the_rest() {
    let p = Problem::new(vec![1.0, 1.0], vec![job(2.0, 2.0, 0..1), job(1.0, 1.0, 0..2)]);
    let sol = solve_problem(&p, PeakSearch::Windows).unwrap();
    assert_abs_diff_eq!(sol.rates[0][0], 2.0, epsilon = 1e-12);
    assert_abs_diff_eq!(sol.rates[1][0], 0.0, epsilon = 1e-12);
    assert_abs_diff_eq!(sol.rates[1][1], 1.0, epsilon = 1e-12);
    let kkt = verify_kkt_problem(&p, &sol.rates, &sol.totals, KKT_TOL);
    assert!(kkt.passed);
}

#[test]
fn negative_residual_gets_zero_inside_and_stays_active() {
    // Job 1 can finish at its cap outside interval 0, so it is left out.
    let p = Problem::new(vec![1.0, 2.0], vec![job(3.0, 3.0, 0..1), job(1.0, 1.0, 0..2)]);
    let mut st = SolverState::new(&p);
    let set = set_of(&[0], p.lengths());
    let rate = st.balanced_rate(&set);
    assert!(st.residual_demand(1, &set).unwrap() < 0.0);
    st.allocate_rates(&set, rate).unwrap();
    assert_eq!(st.rates(1)[0], 0.0);
    assert!(st.is_job_active(1));
    assert!(!st.is_job_active(0));
}

#[test]
fn solve_single_pev_is_uniform() {
    let reqs = vec![req(1, 0.0, 4.0, 4.0, 3.3)];
    let sol = solve_offline(&reqs, &CostModel::REFERENCE).unwrap();
    assert_eq!(sol.schedule.totals().len(), 1);
    assert_abs_diff_eq!(sol.schedule.totals()[0], 1.0, epsilon = 1e-12);
}

#[test]
fn solve_two_pev_balances_everything() {
    let reqs = two_pev();
    let sol = solve_offline(&reqs, &CostModel::REFERENCE).unwrap();
    for &s in sol.schedule.totals() {
        assert_abs_diff_eq!(s, 1.5, epsilon = 1e-12);
    }
    let r1 = sol.schedule.entry(RequestId(1)).unwrap();
    let r2 = sol.schedule.entry(RequestId(2)).unwrap();
    assert_abs_diff_eq!(r1.rates[0], 1.0, epsilon = 1e-12);
    assert_abs_diff_eq!(r2.rates[0], 0.5, epsilon = 1e-12);
    assert_abs_diff_eq!(r2.rates[1], 1.5, epsilon = 1e-12);
    let kkt = verify_kkt(&sol.schedule, &reqs, &sol.decomposition, KKT_TOL).unwrap();
    assert!(kkt.passed, "{kkt:?}");
}

#[test]
fn solve_tight_deadline_instance() {
    let reqs = tight();
    let sol = solve_offline(&reqs, &CostModel::REFERENCE).unwrap();
    assert_abs_diff_eq!(sol.schedule.totals()[0], 2.0, epsilon = 1e-12);
    assert_abs_diff_eq!(sol.schedule.totals()[1], 1.0, epsilon = 1e-12);
    let kkt = verify_kkt(&sol.schedule, &reqs, &sol.decomposition, KKT_TOL).unwrap();
    assert!(kkt.passed);
}

#[test]
fn solve_rejects_infeasible_requests() {
    let reqs = vec![req(1, 0.0, 4.0, 14.0, 3.3)];
    assert!(matches!(
        solve_offline(&reqs, &CostModel::REFERENCE),
        Err(crate::Error::Infeasible(ids)) if ids == vec![RequestId(1)]
    ));
}

#[test]
fn kkt_detects_unbalanced_interior_rates() {
    let reqs = two_pev();
    let d = decompose_intervals(&reqs);
    // 0.1 kWh of the second PEV moved from [2,4] into [0,2].
    let schedule = RateSchedule::new(
        vec![
            RequestRates {
                id: RequestId(1),
                first_interval: 0,
                rates: vec![1.0],
            },
            RequestRates {
                id: RequestId(2),
                first_interval: 0,
                rates: vec![0.55, 1.45],
            },
        ],
        2,
    )
    .unwrap();
    let kkt = verify_kkt(&schedule, &reqs, &d, KKT_TOL).unwrap();
    assert!(!kkt.passed);
    assert_abs_diff_eq!(kkt.max_balance_violation, 0.1, epsilon = 1e-12);
}

#[test]
fn kkt_accepts_single_uniform_schedule() {
    let reqs = vec![req(1, 0.0, 4.0, 4.0, 3.3)];
    let d = decompose_intervals(&reqs);
    let schedule = RateSchedule::new(
        vec![RequestRates {
            id: RequestId(1),
            first_interval: 0,
            rates: vec![1.0],
        }],
        1,
    )
    .unwrap();
    assert!(verify_kkt(&schedule, &reqs, &d, KKT_TOL).unwrap().passed);
}

#[test]
fn oracle_matches_on_small_examples() {
    let cost = CostModel::REFERENCE;
    let single = vec![req(1, 0.0, 4.0, 4.0, 3.3)];
    let sched = oracle_solve(&single, &cost, ORACLE_TOL).unwrap();
    assert_abs_diff_eq!(sched.totals()[0], 1.0, epsilon = 1e-9);

    let reqs = tight();
    let sched = oracle_solve(&reqs, &cost, ORACLE_TOL).unwrap();
    assert_abs_diff_eq!(sched.totals()[0], 2.0, epsilon = 1e-6);
    assert_abs_diff_eq!(sched.totals()[1], 1.0, epsilon = 1e-6);

    let reqs = two_pev();
    let d = decompose_intervals(&reqs);
    let sched = oracle_solve(&reqs, &cost, ORACLE_TOL).unwrap();
    let exact = solve_offline(&reqs, &cost).unwrap();
    assert_abs_diff_eq!(evaluate_cost(&sched, &d, &cost).unwrap(), exact.cost, epsilon = 1e-9);
}

#[test]
fn first_interval_rates_match_full_solve() {
    let p = Problem::new(vec![2.0, 2.0], vec![job(2.0, 2.0, 0..1), job(4.0, 2.0, 0..2)]);
    let x = first_interval_rates(&p).unwrap();
    assert_abs_diff_eq!(x[0], 1.0, epsilon = 1e-12);
    assert_abs_diff_eq!(x[1], 0.5, epsilon = 1e-12);
}

#[test]
fn peaks_are_recorded_in_order() {
    let reqs = tight();
    let sol = solve_offline(&reqs, &CostModel::REFERENCE).unwrap();
    assert!(!sol.peaks.is_empty());
    assert!(sol.peaks.windows(2).all(|w| w[1].rate <= w[0].rate));
    assert_abs_diff_eq!(sol.peaks[0].rate, 2.0, epsilon = 1e-12);
}
