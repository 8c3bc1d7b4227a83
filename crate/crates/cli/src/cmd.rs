use std::path::Path;
use std::process::ExitCode;

use chargesched::model::{check_request_feasible, validate_requests, Instance};
use chargesched::offline::{solve_offline, verify_kkt, KKT_TOL};
use chargesched::online::AlgorithmKind;
use chargesched::report::{self, RunManifest, ScheduleReport};
use chargesched::schedule::{validate_schedule, DEMAND_TOL};
use chargesched::sim::{aggregate_ratios, q_sweep, replication_seeds, simulate as run_sim, ScenarioConfig};
use chargesched::verify::{kkt_suite, online_suite, oracle_suite, SuiteReport};
use chargesched::Error;

use crate::Suite;

pub const DOMAIN_FAILURE: u8 = 1;
pub const USAGE: u8 = 2;

#[derive(Debug)]
pub struct Failure {
    pub error: String,
    pub code: u8,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Parse { .. } | Error::Config(_) | Error::Json(_) | Error::Io(_) => USAGE,
            _ => DOMAIN_FAILURE,
        };
        Failure {
            error: e.to_string(),
            code,
        }
    }
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure {
        error: msg.into(),
        code: USAGE,
    }
}

type CmdResult = Result<ExitCode, Failure>;

pub fn solve(instance: &Path, out: Option<&Path>) -> CmdResult {
    let inst = Instance::load(instance)?;
    validate_requests(&inst.requests)?;
    let infeasible: Vec<_> = inst
        .requests
        .iter()
        .filter(|r| !check_request_feasible(r))
        .map(|r| r.id)
        .collect();
    if !infeasible.is_empty() {
        return Err(Error::Infeasible(infeasible).into());
    }
    let sol = solve_offline(&inst.requests, &inst.cost)?;
    let kkt = verify_kkt(&sol.schedule, &inst.requests, &sol.decomposition, KKT_TOL)?;
    let feas = validate_schedule(&sol.schedule, &inst.requests, &sol.decomposition, DEMAND_TOL)?;
    let ok = kkt.passed && feas.feasible;
    let rep = ScheduleReport::new(&sol, kkt, feas);
    match out {
        Some(path) => {
            report::write_json(path, &rep)?;
            println!("cost {:.9} $ over {} intervals", rep.cost, rep.intervals.len());
        }
        None => println!("{}", serde_json::to_string_pretty(&rep).map_err(Error::from)?),
    }
    if ok {
        Ok(ExitCode::SUCCESS)
    } else {
        eprintln!(
            "verification failed: KKT violation {:.3e} kW, max shortfall {:.3e} kWh",
            rep.kkt.max_violation(),
            rep.feasibility.max_shortfall()
        );
        Ok(ExitCode::from(DOMAIN_FAILURE))
    }
}

fn parse_algorithms(names: &[String], q: f64) -> Result<Vec<AlgorithmKind>, Failure> {
    if names.is_empty() {
        return Ok(vec![
            AlgorithmKind::Orchard { q },
            AlgorithmKind::Oa,
            AlgorithmKind::Avg,
            AlgorithmKind::Eg,
        ]);
    }
    names
        .iter()
        .map(|n| {
            let kind: AlgorithmKind = n
                .parse()
                .map_err(|e: Error| usage(format!("{e}; expected one of oa, orchard, orchard:<q>, avg, eg")))?;
            Ok(match (kind, n.contains(':')) {
                (AlgorithmKind::Orchard { .. }, false) => AlgorithmKind::Orchard { q },
                _ => kind,
            })
        })
        .collect()
}

pub fn simulate(config_path: &Path, algos: &[String], q: f64, runs: usize, seed: u64, out: &Path) -> CmdResult {
    if !(q.is_finite() && q >= 1.0) {
        return Err(usage(format!("--q must be >= 1, got {q}")));
    }
    let algorithms = parse_algorithms(algos, q)?;
    let config = ScenarioConfig::load(config_path)?;
    let results = run_sim(&config, &algorithms, runs, seed)?;
    let summary = aggregate_ratios(&results);

    report::write_file(&out.join("results.csv"), &report::results_csv(&results)?)?;
    report::write_file(&out.join("summary.csv"), &report::summary_csv(&summary)?)?;
    let mut manifest = RunManifest::new("simulate", out);
    manifest.config = Some(config_path.to_path_buf());
    manifest.seeds = replication_seeds(seed, runs).collect();
    manifest.algorithms = algorithms.iter().map(|a| a.to_string()).collect();
    manifest.q = Some(q);
    report::write_json(&out.join("manifest.json"), &manifest)?;

    println!("{} ({} replications)", config.name, runs);
    for s in &summary {
        let label = if s.algorithm == "ORCHARD" {
            format!("ORCHARD(q={})", s.q)
        } else {
            s.algorithm.clone()
        };
        println!(
            "  {label:<16} mean {:.4} +/- {:.4}  max {:.4}",
            s.mean_ratio, s.std_err, s.max_ratio
        );
    }
    Ok(ExitCode::SUCCESS)
}

/// Parses `q_min:q_max:step` into the grid `q_min, q_min + step, ...`.
pub fn parse_sweep(range: &str) -> Result<Vec<f64>, Failure> {
    let parts: Vec<&str> = range.split(':').collect();
    let [lo, hi, step] = parts.as_slice() else {
        return Err(usage(format!("--sweep expects q_min:q_max:step, got {range:?}")));
    };
    let num = |s: &str| {
        s.trim()
            .parse::<f64>()
            .map_err(|_| usage(format!("--sweep: {s:?} is not a number")))
    };
    let (lo, hi, step) = (num(lo)?, num(hi)?, num(step)?);
    if !(step.is_finite() && step > 0.0) {
        return Err(usage(format!("--sweep: step must be positive, got {step}")));
    }
    if !(1.0 <= lo && lo <= hi && hi <= 5.0) {
        return Err(usage(format!("--sweep: need 1 <= q_min <= q_max <= 5, got {lo}:{hi}")));
    }
    let n = ((hi - lo) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|i| ((lo + i as f64 * step) * 1e9).round() / 1e9).collect())
}

pub fn sweep_q(config_path: &Path, range: &str, runs: usize, seed: u64, out: &Path) -> CmdResult {
    let qs = parse_sweep(range)?;
    let config = ScenarioConfig::load(config_path)?;
    let sweep = q_sweep(&config, &qs, runs, seed)?;
    report::write_file(&out.join("sweep.csv"), &report::sweep_csv(&sweep)?)?;
    let mut manifest = RunManifest::new("sweep-q", out);
    manifest.config = Some(config_path.to_path_buf());
    manifest.seeds = replication_seeds(seed, runs).collect();
    manifest.algorithms = qs.iter().map(|&q| AlgorithmKind::Orchard { q }.to_string()).collect();
    report::write_json(&out.join("manifest.json"), &manifest)?;
    for p in &sweep.points {
        println!("q {:<5} mean {:.4} +/- {:.4}", p.q, p.mean_ratio, p.std_err);
    }
    println!("argmin q = {} (mean ratio {:.4})", sweep.argmin_q, sweep.min_ratio);
    Ok(ExitCode::SUCCESS)
}

pub fn generate(config_path: &Path, seed: u64, out: &Path) -> CmdResult {
    let config = ScenarioConfig::load(config_path)?;
    let requests = chargesched::sim::generate_instance(&config, seed)?;
    let mut text = report::instance_json(&requests, &config.cost)?;
    text.push('\n');
    report::write_file(out, text.as_bytes())?;
    println!("{} requests", requests.len());
    Ok(ExitCode::SUCCESS)
}

pub fn verify(suite: Suite, count: usize, seed: u64, max_n: Option<usize>) -> CmdResult {
    let rep: SuiteReport = match suite {
        Suite::Kkt => kkt_suite(count, seed, max_n.unwrap_or(10))?,
        Suite::Oracle => oracle_suite(count, seed, max_n.unwrap_or(8))?,
        Suite::OnlineInvariants => online_suite(count, seed, max_n.unwrap_or(10))?,
    };
    let what = match suite {
        Suite::Kkt => "max KKT violation (kW)",
        Suite::Oracle => "max relative cost gap",
        Suite::OnlineInvariants => "max ORCHARD ratio",
    };
    println!(
        "{}: {}/{} instances passed, {what} {:.3e}",
        rep.suite,
        rep.instances - rep.failures,
        rep.instances,
        rep.worst
    );
    match rep.first_failure {
        None => Ok(ExitCode::SUCCESS),
        Some(s) => {
            eprintln!("first failing instance seed: {s}");
            Ok(ExitCode::from(DOMAIN_FAILURE))
        }
    }
}
