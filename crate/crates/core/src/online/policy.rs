//! Rate decisions of the four online policies.

use crate::error::{Error, Result};
use crate::offline::{first_interval_rates, Job, Problem};
use crate::schedule::DEMAND_TOL;

use super::PresentPev;

/// OA decision: solves the snapshot in which every present PEV is
/// available from `now` until its deadline with its residual demand and
/// nothing else will arrive, and returns the rates of its first interval.
pub fn oa_rates(now: f64, present: &[PresentPev]) -> Result<Vec<f64>> {
    if present.is_empty() {
        return Ok(Vec::new());
    }
    let mut order: Vec<usize> = (0..present.len()).collect();
    order.sort_by_key(|&i| present[i].deadline);

    // Boundaries: now, then each distinct deadline.
    let mut lengths = Vec::new();
    let mut end_index = vec![0; present.len()];
    let mut last = None;
    for &i in &order {
        let d = present[i].deadline;
        if last != Some(d) {
            let len = match last {
                None => d.hours() - now,
                Some(prev) => prev.hours_until(d),
            };
            if len <= 0.0 {
                return Err(Error::OnlineFault {
                    time_h: now,
                    reason: format!("PEV {} is present past its deadline", present[i].id),
                });
            }
            lengths.push(len);
            last = Some(d);
        }
        end_index[i] = lengths.len();
    }

    let mut cum = vec![0.0; lengths.len() + 1];
    for (k, &len) in lengths.iter().enumerate() {
        cum[k + 1] = cum[k] + len;
    }
    let jobs = present
        .iter()
        .zip(&end_index)
        .map(|(p, &end)| {
            let limit = p.max_rate * cum[end];
            if p.residual > limit + DEMAND_TOL {
                return Err(Error::OnlineFault {
                    time_h: now,
                    reason: format!(
                        "PEV {} needs {:.9} kWh but at most {:.9} kWh fit before its deadline",
                        p.id, p.residual, limit
                    ),
                });
            }
            Ok(Job {
                demand: p.residual.min(limit),
                max_rate: p.max_rate,
                span: 0..end,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    first_interval_rates(&Problem::new(lengths, jobs))
}

/// ORCHARD speed-up: raises the OA total to `min(q * sum(xbar), sum(U))`
/// and hands the extra out in proportion to each PEV's headroom.
///
/// Every rate stays in `[xbar_i, U_i]` and the rates sum to the raised total.
pub fn orchard_rates(xbar: &[f64], caps: &[f64], q: f64) -> Vec<f64> {
    assert_eq!(xbar.len(), caps.len(), "one cap per rate");
    let sum_x: f64 = xbar.iter().sum();
    let sum_u: f64 = caps.iter().sum();
    let target = (q * sum_x).min(sum_u);
    let headroom: f64 = xbar.iter().zip(caps).map(|(x, u)| u - x).sum();
    if headroom <= 0.0 {
        return caps.to_vec();
    }
    let extra = (q - 1.0) / q * target;
    let mut rates: Vec<f64> = xbar
        .iter()
        .zip(caps)
        .map(|(&x, &u)| (x + (u - x) / headroom * extra).min(u))
        .collect();

    // Clipping can leave the sum short of the target; top up the PEVs
    // below their cap until it is met or everyone is capped.
    let eps = 1e-12 * sum_u.max(1.0);
    for _ in 0..rates.len() {
        let short = target - rates.iter().sum::<f64>();
        if short <= eps {
            break;
        }
        let room: f64 = rates.iter().zip(caps).map(|(x, u)| u - x).sum();
        if room <= eps {
            break;
        }
        let scale = (short / room).min(1.0);
        for (x, &u) in rates.iter_mut().zip(caps) {
            *x = (*x + (u - *x) * scale).min(u);
        }
    }
    rates
}

/// AVG: each PEV's demand spread evenly over its parking window.
pub fn avg_rates(present: &[PresentPev]) -> Vec<f64> {
    present
        .iter()
        .map(|p| p.demand / p.arrival.hours_until(p.deadline))
        .collect()
}

/// EG: full rate until the residual demand is met.
pub fn eg_rates(present: &[PresentPev]) -> Vec<f64> {
    present
        .iter()
        .map(|p| if p.residual > 0.0 { p.max_rate } else { 0.0 })
        .collect()
}
