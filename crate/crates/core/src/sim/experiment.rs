use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{ChargingRequest, RequestId};
use crate::offline::solve_offline;
use crate::online::{run_online_with, AlgorithmKind};
use crate::time::{TimeStamp, TICKS_PER_HOUR};

use super::ScenarioConfig;

/// Draws one day of requests.
///
/// Arrivals in each segment form a Poisson process at the segment's rate.
/// Each arrival picks a PEV type, an exponential parking time with its
/// segment's mean (at least one tick) and a demand uniform on
/// `[0, min(U * parking, capacity)]`. Times are rounded to ticks before the
/// demand is drawn, so every request is feasible. Ids follow arrival order.
pub fn generate_instance(config: &ScenarioConfig, seed: u64) -> Result<Vec<ChargingRequest>> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let types = WeightedIndex::new(config.pev_types.iter().map(|t| t.probability))
        .map_err(|e| Error::Config(format!("pev_types: {e}")))?;
    let mut requests = Vec::new();
    for seg in &config.segments {
        if seg.arrival_rate <= 0.0 {
            continue;
        }
        let gap = Exp::new(seg.arrival_rate).map_err(|e| Error::Config(e.to_string()))?;
        let parking = Exp::new(1.0 / seg.mean_parking_h).map_err(|e| Error::Config(e.to_string()))?;
        let mut t = seg.start_h;
        loop {
            t += gap.sample(&mut rng);
            if t >= seg.end_h {
                break;
            }
            let ty = &config.pev_types[types.sample(&mut rng)];
            let stay = parking.sample(&mut rng);
            let arrival = TimeStamp::from_hours(t).expect("arrival time is non-negative");
            let ticks = ((stay * TICKS_PER_HOUR as f64).round() as u64).max(1);
            let deadline = arrival + ticks;
            let limit = (ty.max_rate_kw * arrival.hours_until(deadline)).min(ty.capacity_kwh);
            let demand = rng.random_range(0.0..=limit);
            requests.push(ChargingRequest::new(
                RequestId(requests.len() as u32),
                arrival,
                deadline,
                demand,
                ty.max_rate_kw,
                ty.capacity_kwh,
            )?);
        }
    }
    Ok(requests)
}

/// One online algorithm's result on one replication.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlgorithmOutcome {
    pub algorithm: AlgorithmKind,
    /// $
    pub cost: f64,
    pub ratio: f64,
    /// Largest unmet demand over all requests, kWh.
    pub max_shortfall: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplicationResult {
    pub seed: u64,
    pub requests: usize,
    /// $
    pub offline_cost: f64,
    pub outcomes: Vec<AlgorithmOutcome>,
}

/// `online / offline`, defined as 1 when both are zero.
pub fn cost_ratio(online: f64, offline: f64) -> f64 {
    if offline > 0.0 {
        online / offline
    } else if online > 0.0 {
        f64::INFINITY
    } else {
        1.0
    }
}

/// Runs every algorithm and the offline solver on the instance for `seed`.
pub fn run_replication(config: &ScenarioConfig, seed: u64, algorithms: &[AlgorithmKind]) -> Result<ReplicationResult> {
    let requests = generate_instance(config, seed)?;
    let offline_cost = solve_offline(&requests, &config.cost)?.cost;
    let outcomes = algorithms
        .iter()
        .map(|&algo| {
            let run = run_online_with(&requests, &config.cost, algo, false)?;
            let max_shortfall = requests
                .iter()
                .zip(&run.delivered)
                .map(|(r, (_, d))| (r.demand - d).max(0.0))
                .fold(0.0, f64::max);
            Ok(AlgorithmOutcome {
                algorithm: algo,
                cost: run.total_cost,
                ratio: cost_ratio(run.total_cost, offline_cost),
                max_shortfall,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ReplicationResult {
        seed,
        requests: requests.len(),
        offline_cost,
        outcomes,
    })
}

/// Seeds `seed_base, seed_base + 1, ...`.
pub fn replication_seeds(seed_base: u64, replications: usize) -> impl Iterator<Item = u64> {
    (0..replications as u64).map(move |i| seed_base.wrapping_add(i))
}

/// Runs `replications` independent replications in parallel; results come
/// back in seed order.
pub fn simulate(
    config: &ScenarioConfig,
    algorithms: &[AlgorithmKind],
    replications: usize,
    seed_base: u64,
) -> Result<Vec<ReplicationResult>> {
    config.validate()?;
    for a in algorithms {
        a.validate()?;
    }
    let seeds: Vec<u64> = replication_seeds(seed_base, replications).collect();
    seeds
        .par_iter()
        .map(|&seed| run_replication(config, seed, algorithms))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RatioSummary {
    pub algorithm: String,
    pub q: f64,
    pub replications: usize,
    pub mean_ratio: f64,
    pub std_err: f64,
    pub max_ratio: f64,
}

/// Mean and standard error of `values`.
pub fn mean_and_std_err(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Per-algorithm mean ratio over `results`, in the order algorithms first appear.
pub fn aggregate_ratios(results: &[ReplicationResult]) -> Vec<RatioSummary> {
    let mut keys: Vec<AlgorithmKind> = Vec::new();
    for r in results {
        for o in &r.outcomes {
            if !keys.contains(&o.algorithm) {
                keys.push(o.algorithm);
            }
        }
    }
    keys.into_iter()
        .map(|algo| {
            let ratios: Vec<f64> = results
                .iter()
                .flat_map(|r| r.outcomes.iter().filter(|o| o.algorithm == algo).map(|o| o.ratio))
                .collect();
            let (mean_ratio, std_err) = mean_and_std_err(&ratios);
            RatioSummary {
                algorithm: algo.name().to_string(),
                q: algo.q(),
                replications: ratios.len(),
                mean_ratio,
                std_err,
                max_ratio: ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepPoint {
    pub q: f64,
    pub mean_ratio: f64,
    pub std_err: f64,
    pub max_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QSweep {
    pub points: Vec<SweepPoint>,
    pub argmin_q: f64,
    pub min_ratio: f64,
    /// Every replication, with one ORCHARD outcome per q.
    pub replications: Vec<ReplicationResult>,
}

/// Mean ORCHARD ratio for each q, with the same instances (common random
/// numbers) at every q.
pub fn q_sweep(config: &ScenarioConfig, q_values: &[f64], replications: usize, seed_base: u64) -> Result<QSweep> {
    if q_values.is_empty() {
        return Err(Error::Domain("q sweep needs at least one q value".into()));
    }
    let algorithms: Vec<AlgorithmKind> = q_values.iter().map(|&q| AlgorithmKind::Orchard { q }).collect();
    let results = simulate(config, &algorithms, replications, seed_base)?;
    let points: Vec<SweepPoint> = q_values
        .iter()
        .enumerate()
        .map(|(i, &q)| {
            let ratios: Vec<f64> = results.iter().map(|r| r.outcomes[i].ratio).collect();
            let (mean_ratio, std_err) = mean_and_std_err(&ratios);
            SweepPoint {
                q,
                mean_ratio,
                std_err,
                max_ratio: ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            }
        })
        .collect();
    let best = points
        .iter()
        .min_by(|a, b| a.mean_ratio.total_cmp(&b.mean_ratio))
        .expect("at least one point");
    Ok(QSweep {
        argmin_q: best.q,
        min_ratio: best.mean_ratio,
        points,
        replications: results,
    })
}
