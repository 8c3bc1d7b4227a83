//! Fixed-point time on a milli-hour grid.

use std::fmt;
use std::ops::{Add, Sub};

use serde::{Deserialize, Serialize};

/// Number of grid ticks in one hour.
pub const TICKS_PER_HOUR: u64 = 1000;

/// A non-negative instant measured in milli-hours (1 tick = 0.001 h).
///
/// Integer ticks keep boundary comparisons exact, so two requests whose
/// arrival and departure coincide always merge into a single boundary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TimeStamp(u64);

impl TimeStamp {
    pub const ZERO: TimeStamp = TimeStamp(0);

    pub const fn from_ticks(ticks: u64) -> Self {
        TimeStamp(ticks)
    }

    /// Quantizes a time in decimal hours to the nearest tick.
    ///
    /// Returns `None` for negative or non-finite input.
    pub fn from_hours(hours: f64) -> Option<Self> {
        if !hours.is_finite() || hours < 0.0 {
            return None;
        }
        Some(TimeStamp((hours * TICKS_PER_HOUR as f64).round() as u64))
    }

    pub const fn ticks(self) -> u64 {
        self.0
    }

    pub fn hours(self) -> f64 {
        self.0 as f64 / TICKS_PER_HOUR as f64
    }

    /// Length of `[self, later]` in hours, zero if `later` precedes `self`.
    pub fn hours_until(self, later: TimeStamp) -> f64 {
        later.0.saturating_sub(self.0) as f64 / TICKS_PER_HOUR as f64
    }
}

impl Add<u64> for TimeStamp {
    type Output = TimeStamp;

    fn add(self, ticks: u64) -> TimeStamp {
        TimeStamp(self.0 + ticks)
    }
}

impl Sub for TimeStamp {
    type Output = u64;

    /// Difference in ticks. Panics (in debug) if `rhs > self`.
    fn sub(self, rhs: TimeStamp) -> u64 {
        self.0 - rhs.0
    }
}

impl fmt::Display for TimeStamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{:03}h", self.0 / TICKS_PER_HOUR, self.0 % TICKS_PER_HOUR)
    }
}
