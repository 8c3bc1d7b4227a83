//! CSV and JSON outputs shared by the command-line tool and the tests.
//!
//! Floats are written with Rust's shortest round-trip formatting, so the
//! same inputs always give byte-identical files.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::model::ChargingRequest;
use crate::offline::{KktReport, OfflineSolution};
use crate::schedule::FeasibilityReport;
use crate::sim::{QSweep, RatioSummary, ReplicationResult};

/// One row of the per-replication results file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub seed: u64,
    pub algorithm: String,
    pub q: f64,
    pub cost: f64,
    pub offline_cost: f64,
    pub ratio: f64,
}

pub const RESULTS_HEADER: &str = "seed,algorithm,q,cost,offline_cost,ratio";

pub fn result_rows(results: &[ReplicationResult]) -> Vec<ResultRow> {
    results
        .iter()
        .flat_map(|r| {
            r.outcomes.iter().map(move |o| ResultRow {
                seed: r.seed,
                algorithm: o.algorithm.name().to_string(),
                q: o.algorithm.q(),
                cost: o.cost,
                offline_cost: r.offline_cost,
                ratio: o.ratio,
            })
        })
        .collect()
}

fn to_csv<T: Serialize>(rows: &[T], header: &[&str]) -> Result<Vec<u8>> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    w.write_record(header)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(w.into_inner().map_err(|e| e.into_error())?)
}

pub fn results_csv(results: &[ReplicationResult]) -> Result<Vec<u8>> {
    to_csv(&result_rows(results), &RESULTS_HEADER.split(',').collect::<Vec<_>>())
}

pub fn summary_csv(summary: &[RatioSummary]) -> Result<Vec<u8>> {
    to_csv(
        summary,
        &["algorithm", "q", "replications", "mean_ratio", "std_err", "max_ratio"],
    )
}

#[derive(Serialize)]
struct SweepRow {
    q: f64,
    mean: f64,
    stderr: f64,
    max: f64,
}

pub fn sweep_csv(sweep: &QSweep) -> Result<Vec<u8>> {
    let rows: Vec<SweepRow> = sweep
        .points
        .iter()
        .map(|p| SweepRow {
            q: p.q,
            mean: p.mean_ratio,
            stderr: p.std_err,
            max: p.max_ratio,
        })
        .collect();
    to_csv(&rows, &["q", "mean", "stderr", "max"])
}

/// Everything needed to rerun a command and get the same files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config: Option<PathBuf>,
    pub seeds: Vec<u64>,
    pub algorithms: Vec<String>,
    pub q: Option<f64>,
    pub out_dir: PathBuf,
    pub version: String,
}

impl RunManifest {
    pub fn new(command: &str, out_dir: &Path) -> Self {
        RunManifest {
            command: command.to_string(),
            config: None,
            seeds: Vec::new(),
            algorithms: Vec::new(),
            q: None,
            out_dir: out_dir.to_path_buf(),
            version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntervalRecord {
    pub start_h: f64,
    pub end_h: f64,
    pub total_kw: f64,
    /// Request id to kW, for requests parked in the interval.
    pub rates: BTreeMap<u32, f64>,
}

/// Written by `solve`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScheduleReport {
    pub intervals: Vec<IntervalRecord>,
    /// $
    pub cost: f64,
    pub kkt: KktReport,
    pub feasibility: FeasibilityReport,
}

impl ScheduleReport {
    pub fn new(solution: &OfflineSolution, kkt: KktReport, feasibility: FeasibilityReport) -> Self {
        let d = &solution.decomposition;
        let intervals = (0..d.num_intervals())
            .map(|k| {
                let (start, end) = d.bounds(k);
                IntervalRecord {
                    start_h: start.hours(),
                    end_h: end.hours(),
                    total_kw: solution.schedule.totals()[k],
                    rates: d
                        .parked_ids(k)
                        .map(|id| (id.0, solution.schedule.rate(id, k).unwrap_or(0.0)))
                        .collect(),
                }
            })
            .collect();
        ScheduleReport {
            intervals,
            cost: solution.cost,
            kkt,
            feasibility,
        }
    }
}

/// Requests in instance-file form, for writing generated instances out.
pub fn instance_json(requests: &[ChargingRequest], cost: &crate::model::CostModel) -> Result<String> {
    let file = crate::model::Instance {
        cost: *cost,
        requests: requests.to_vec(),
    }
    .to_file();
    Ok(serde_json::to_string_pretty(&file)?)
}

/// Writes `bytes` to `path`, creating parent directories.
pub fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    let mut f = std::fs::File::create(path)?;
    f.write_all(bytes)?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_file(path, text.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::online::AlgorithmKind;
    use crate::sim::{aggregate_ratios, AlgorithmOutcome};

    fn results() -> Vec<ReplicationResult> {
        vec![ReplicationResult {
            seed: 4,
            requests: 2,
            offline_cost: 0.5,
            outcomes: vec![
                AlgorithmOutcome {
                    algorithm: AlgorithmKind::Oa,
                    cost: 0.6,
                    ratio: 1.2,
                    max_shortfall: 0.0,
                },
                AlgorithmOutcome {
                    algorithm: AlgorithmKind::Orchard { q: 1.46 },
                    cost: 0.55,
                    ratio: 1.1,
                    max_shortfall: 0.0,
                },
            ],
        }]
    }

    #[test]
    fn results_csv_layout() {
        let text = String::from_utf8(results_csv(&results()).unwrap()).unwrap();
        assert_eq!(
            text,
            "seed,algorithm,q,cost,offline_cost,ratio\n4,OA,1.0,0.6,0.5,1.2\n4,ORCHARD,1.46,0.55,0.5,1.1\n"
        );
    }

    #[test]
    fn summary_csv_has_one_row_per_algorithm() {
        let text = String::from_utf8(summary_csv(&aggregate_ratios(&results())).unwrap()).unwrap();
        assert_eq!(text.lines().count(), 3);
        assert!(text.starts_with("algorithm,q,replications,mean_ratio,std_err,max_ratio\n"));
    }

    #[test]
    fn empty_results_still_have_a_header() {
        assert_eq!(results_csv(&[]).unwrap(), format!("{RESULTS_HEADER}\n").into_bytes());
    }
}
