use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{validate_requests, ChargingRequest, CostModel, RequestId};

use super::policy::{avg_rates, eg_rates, oa_rates, orchard_rates};
use super::{AlgorithmKind, EventKind, OnlineEvent, OnlineState};

/// Slack when comparing the clock with a deadline, hours.
const TIME_EPS: f64 = 1e-9;

/// Constant-rate stretch of an execution.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceSegment {
    pub t_start_h: f64,
    pub t_end_h: f64,
    pub rates: Vec<(RequestId, f64)>,
    pub total_kw: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OnlineRun {
    pub algorithm: AlgorithmKind,
    /// $
    pub total_cost: f64,
    /// Number of times the policy recomputed its rates.
    pub decisions: usize,
    /// Energy delivered per request, in input order, kWh.
    pub delivered: Vec<(RequestId, f64)>,
    /// Empty unless recording was requested.
    pub trace: Vec<TraceSegment>,
    pub events: Vec<OnlineEvent>,
}

/// Runs `algo` over `requests`, revealing each request only at its arrival.
pub fn run_online(requests: &[ChargingRequest], cost: &CostModel, algo: AlgorithmKind) -> Result<OnlineRun> {
    run_online_with(requests, cost, algo, true)
}

/// [`run_online`] with optional trace recording.
pub fn run_online_with(
    requests: &[ChargingRequest],
    cost: &CostModel,
    algo: AlgorithmKind,
    record: bool,
) -> Result<OnlineRun> {
    cost.validate()?;
    algo.validate()?;
    validate_requests(requests)?;

    let mut order: Vec<usize> = (0..requests.len()).collect();
    order.sort_by_key(|&i| (requests[i].arrival, requests[i].id));
    let position: std::collections::HashMap<RequestId, usize> =
        requests.iter().enumerate().map(|(i, r)| (r.id, i)).collect();

    let mut run = OnlineRun {
        algorithm: algo,
        total_cost: 0.0,
        decisions: 0,
        delivered: requests.iter().map(|r| (r.id, 0.0)).collect(),
        trace: Vec::new(),
        events: Vec::new(),
    };
    let Some(&first) = order.first() else {
        return Ok(run);
    };
    let mut state = OnlineState::new(requests[first].arrival.hours());
    let mut next = 0;
    let mut rates: Vec<f64> = Vec::new();
    let mut stale = true;
    let max_steps = 16 * (requests.len() + 1) * (requests.len() + 1) + 1024;

    for _ in 0..max_steps {
        // Arrivals due now.
        while next < order.len() && requests[order[next]].arrival.hours() <= state.now {
            let req = &requests[order[next]];
            state.admit(req);
            if record {
                run.events.push(OnlineEvent {
                    time_h: state.now,
                    kind: EventKind::Arrival,
                    id: req.id,
                });
            }
            stale = true;
            next += 1;
        }
        // Anyone at their deadline must be done already.
        if let Some(p) = state
            .present
            .iter()
            .find(|p| p.deadline.hours() <= state.now + TIME_EPS)
        {
            return Err(Error::OnlineFault {
                time_h: state.now,
                reason: format!("PEV {} departs with {:.3e} kWh unmet", p.id, p.residual),
            });
        }

        if state.present.is_empty() {
            if next == order.len() {
                if record {
                    finalize_departures(requests, &mut run);
                }
                return Ok(run);
            }
            state.now = requests[order[next]].arrival.hours();
            continue;
        }

        if stale {
            rates = decide(algo, &state)?;
            run.decisions += 1;
            stale = false;
        }

        let t_arrival = order.get(next).map_or(f64::INFINITY, |&i| requests[i].arrival.hours());
        let t_deadline = state
            .present
            .iter()
            .map(|p| p.deadline.hours())
            .fold(f64::INFINITY, f64::min);
        let t_finish = state
            .present
            .iter()
            .zip(&rates)
            .filter(|(_, &x)| x > 0.0)
            .map(|(p, &x)| state.now + p.residual / x)
            .fold(f64::INFINITY, f64::min);
        let t_next = t_arrival.min(t_deadline).min(t_finish);
        let elapsed = (t_next - state.now).max(0.0);

        let total: f64 = rates.iter().sum();
        run.total_cost += cost.span_cost(total, elapsed);
        for (p, &x) in state.present.iter().zip(&rates) {
            run.delivered[position[&p.id]].1 += x * elapsed;
        }
        if record && elapsed > 0.0 {
            run.trace.push(TraceSegment {
                t_start_h: state.now,
                t_end_h: t_next,
                rates: state.present.iter().zip(&rates).map(|(p, &x)| (p.id, x)).collect(),
                total_kw: total,
            });
        }

        let finished = state.update_residuals(elapsed, &rates)?;
        state.now = t_next;
        if !finished.is_empty() {
            if record {
                for id in finished {
                    run.events.push(OnlineEvent {
                        time_h: state.now,
                        kind: EventKind::Finished,
                        id,
                    });
                }
            }
            stale = true;
        }
    }
    Err(Error::OnlineFault {
        time_h: state.now,
        reason: "event loop did not terminate".into(),
    })
}

fn decide(algo: AlgorithmKind, state: &OnlineState) -> Result<Vec<f64>> {
    Ok(match algo {
        AlgorithmKind::Oa => oa_rates(state.now, &state.present)?,
        AlgorithmKind::Orchard { q } => {
            let xbar = oa_rates(state.now, &state.present)?;
            let caps: Vec<f64> = state.present.iter().map(|p| p.max_rate).collect();
            orchard_rates(&xbar, &caps, q)
        }
        AlgorithmKind::Avg => avg_rates(&state.present),
        AlgorithmKind::Eg => eg_rates(&state.present),
    })
}

/// Appends a departure event per request and sorts the log.
fn finalize_departures(requests: &[ChargingRequest], run: &mut OnlineRun) {
    for r in requests {
        run.events.push(OnlineEvent {
            time_h: r.deadline.hours(),
            kind: EventKind::Departure,
            id: r.id,
        });
    }
    run.events.sort_by(|a, b| {
        a.time_h
            .total_cmp(&b.time_h)
            .then(a.kind.cmp(&b.kind))
            .then(a.id.cmp(&b.id))
    });
}
