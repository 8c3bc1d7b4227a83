use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::CostModel;

/// A stretch of the day with a constant arrival rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Segment {
    pub start_h: f64,
    pub end_h: f64,
    /// PEVs per hour.
    pub arrival_rate: f64,
    /// Mean of the exponential parking time of PEVs arriving here, hours.
    pub mean_parking_h: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PevType {
    pub max_rate_kw: f64,
    pub capacity_kwh: f64,
    pub probability: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    pub horizon_h: f64,
    pub segments: Vec<Segment>,
    pub pev_types: Vec<PevType>,
    #[serde(default)]
    pub cost: CostModel,
}

const PROBABILITY_TOL: f64 = 1e-9;

impl ScenarioConfig {
    /// One of the three reference scenarios (1, 2 or 3), which differ only
    /// in the arrival rate of the two peak periods: 10, 30 or 50 per hour.
    pub fn builtin(scenario: u8) -> Result<Self> {
        let peak = match scenario {
            1 => 10.0,
            2 => 30.0,
            3 => 50.0,
            _ => {
                return Err(Error::Config(format!(
                    "no built-in scenario {scenario}; expected 1, 2 or 3"
                )))
            }
        };
        let seg = |start_h, end_h, arrival_rate, mean_parking_h| Segment {
            start_h,
            end_h,
            arrival_rate,
            mean_parking_h,
        };
        Ok(ScenarioConfig {
            name: format!("scenario{scenario}"),
            horizon_h: 24.0,
            segments: vec![
                seg(0.0, 8.0, 0.0, 0.0),
                seg(8.0, 10.0, 7.0, 10.0),
                seg(10.0, 12.0, 5.0, 0.5),
                seg(12.0, 14.0, peak, 2.0),
                seg(14.0, 18.0, 5.0, 0.5),
                seg(18.0, 20.0, peak, 2.0),
                seg(20.0, 24.0, 5.0, 10.0),
            ],
            pev_types: vec![
                PevType {
                    max_rate_kw: 3.3,
                    capacity_kwh: 35.0,
                    probability: 0.5,
                },
                PevType {
                    max_rate_kw: 1.4,
                    capacity_kwh: 16.0,
                    probability: 0.5,
                },
            ],
            cost: CostModel::REFERENCE,
        })
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, msg: String| Err(Error::Config(format!("{field}: {msg}")));
        if !(self.horizon_h.is_finite() && self.horizon_h > 0.0) {
            return bad("horizon_h", format!("must be positive, got {}", self.horizon_h));
        }
        if self.segments.is_empty() {
            return bad("segments", "must not be empty".into());
        }
        let mut expected_start = 0.0;
        for (i, s) in self.segments.iter().enumerate() {
            let field = |name: &str| format!("segments[{i}].{name}");
            if s.start_h != expected_start {
                return bad(
                    &field("start_h"),
                    format!("expected {expected_start}, got {}", s.start_h),
                );
            }
            if !(s.end_h.is_finite() && s.end_h > s.start_h) {
                return bad(&field("end_h"), format!("must exceed start_h, got {}", s.end_h));
            }
            if !(s.arrival_rate.is_finite() && s.arrival_rate >= 0.0) {
                return bad(&field("arrival_rate"), format!("must be >= 0, got {}", s.arrival_rate));
            }
            if s.arrival_rate > 0.0 && !(s.mean_parking_h.is_finite() && s.mean_parking_h > 0.0) {
                return bad(
                    &field("mean_parking_h"),
                    format!("must be positive, got {}", s.mean_parking_h),
                );
            }
            expected_start = s.end_h;
        }
        if expected_start != self.horizon_h {
            return bad(
                "segments",
                format!("cover [0, {expected_start}) but horizon_h is {}", self.horizon_h),
            );
        }
        if self.pev_types.is_empty() {
            return bad("pev_types", "must not be empty".into());
        }
        for (i, t) in self.pev_types.iter().enumerate() {
            if !(t.max_rate_kw.is_finite() && t.max_rate_kw > 0.0) {
                return bad(
                    &format!("pev_types[{i}].max_rate_kw"),
                    format!("must be positive, got {}", t.max_rate_kw),
                );
            }
            if !(t.capacity_kwh.is_finite() && t.capacity_kwh > 0.0) {
                return bad(
                    &format!("pev_types[{i}].capacity_kwh"),
                    format!("must be positive, got {}", t.capacity_kwh),
                );
            }
            if !(t.probability.is_finite() && t.probability >= 0.0) {
                return bad(
                    &format!("pev_types[{i}].probability"),
                    format!("must be >= 0, got {}", t.probability),
                );
            }
        }
        let total: f64 = self.pev_types.iter().map(|t| t.probability).sum();
        if (total - 1.0).abs() > PROBABILITY_TOL {
            return bad("pev_types", format!("probabilities sum to {total}, not 1"));
        }
        self.cost.validate()
    }

    pub fn parse(text: &str, origin: &str) -> Result<Self> {
        let config: ScenarioConfig = serde_json::from_str(text).map_err(|source| Error::Parse {
            path: origin.to_string(),
            source,
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        ScenarioConfig::parse(&text, &path.display().to_string())
    }

    /// Segment containing time `t` (hours), if any.
    pub fn segment_at(&self, t: f64) -> Option<&Segment> {
        self.segments.iter().find(|s| s.start_h <= t && t < s.end_h)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtins_are_valid() {
        for s in 1..=3 {
            ScenarioConfig::builtin(s).unwrap().validate().unwrap();
        }
        assert!(ScenarioConfig::builtin(4).is_err());
    }

    #[test]
    fn peak_rates_differ_by_scenario() {
        let rate = |s| ScenarioConfig::builtin(s).unwrap().segments[3].arrival_rate;
        assert_eq!((rate(1), rate(2), rate(3)), (10.0, 30.0, 50.0));
    }

    #[test]
    fn json_round_trip() {
        let cfg = ScenarioConfig::builtin(2).unwrap();
        let text = serde_json::to_string_pretty(&cfg).unwrap();
        assert_eq!(ScenarioConfig::parse(&text, "mem").unwrap(), cfg);
    }

    #[test]
    fn gap_in_segments_is_named() {
        let mut cfg = ScenarioConfig::builtin(1).unwrap();
        cfg.segments[2].start_h = 10.5;
        let msg = cfg.validate().unwrap_err().to_string();
        assert!(msg.contains("segments[2].start_h"), "{msg}");
    }

    #[test]
    fn probabilities_must_sum_to_one() {
        let mut cfg = ScenarioConfig::builtin(1).unwrap();
        cfg.pev_types[0].probability = 0.7;
        assert!(cfg.validate().unwrap_err().to_string().contains("pev_types"));
    }

    #[test]
    fn unknown_field_is_rejected() {
        let text = r#"{"name":"x","horizon_h":1,"segments":[],"pev_types":[],"colour":1}"#;
        assert!(matches!(ScenarioConfig::parse(text, "mem"), Err(Error::Parse { .. })));
    }
}
