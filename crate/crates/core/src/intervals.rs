//! Partition of the horizon into intervals over which the parked set is constant.

use std::ops::Range;

use crate::model::{ChargingRequest, RequestId};
use crate::time::TimeStamp;

#[derive(Debug, Clone, PartialEq)]
pub struct IntervalDecomposition {
    boundaries: Vec<TimeStamp>,
    lengths: Vec<f64>,
    /// Positions (into the request slice) parked in each interval.
    parked: Vec<Vec<usize>>,
    /// Interval index range each request parks through.
    spans: Vec<Range<usize>>,
    ids: Vec<RequestId>,
}

/// Splits the horizon at every distinct arrival and deadline.
///
/// Coinciding instants collapse to one boundary, so every interval has a
/// strictly positive length. An empty request list yields no intervals.
pub fn decompose_intervals(requests: &[ChargingRequest]) -> IntervalDecomposition {
    let mut boundaries: Vec<TimeStamp> = requests.iter().flat_map(|r| [r.arrival, r.deadline]).collect();
    boundaries.sort_unstable();
    boundaries.dedup();

    let lengths: Vec<f64> = boundaries.windows(2).map(|w| w[0].hours_until(w[1])).collect();

    let index_of = |t: TimeStamp| boundaries.binary_search(&t).expect("boundary present");
    let spans: Vec<Range<usize>> = requests
        .iter()
        .map(|r| index_of(r.arrival)..index_of(r.deadline))
        .collect();

    let mut parked = vec![Vec::new(); lengths.len()];
    for (pos, span) in spans.iter().enumerate() {
        for k in span.clone() {
            parked[k].push(pos);
        }
    }

    IntervalDecomposition {
        boundaries,
        lengths,
        parked,
        spans,
        ids: requests.iter().map(|r| r.id).collect(),
    }
}

impl IntervalDecomposition {
    pub fn num_intervals(&self) -> usize {
        self.lengths.len()
    }

    pub fn num_requests(&self) -> usize {
        self.spans.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lengths.is_empty()
    }

    pub fn boundaries(&self) -> &[TimeStamp] {
        &self.boundaries
    }

    /// Interval lengths in hours.
    pub fn lengths(&self) -> &[f64] {
        &self.lengths
    }

    pub fn length(&self, k: usize) -> f64 {
        self.lengths[k]
    }

    /// `[start, end]` of interval `k`.
    pub fn bounds(&self, k: usize) -> (TimeStamp, TimeStamp) {
        (self.boundaries[k], self.boundaries[k + 1])
    }

    /// Request positions parked in interval `k`.
    pub fn parked(&self, k: usize) -> &[usize] {
        &self.parked[k]
    }

    pub fn parked_ids(&self, k: usize) -> impl Iterator<Item = RequestId> + '_ {
        self.parked[k].iter().map(|&p| self.ids[p])
    }

    /// Intervals covered by the request at `pos`.
    pub fn span(&self, pos: usize) -> Range<usize> {
        self.spans[pos].clone()
    }

    pub fn spans(&self) -> &[Range<usize>] {
        &self.spans
    }

    pub fn ids(&self) -> &[RequestId] {
        &self.ids
    }

    pub fn position_of(&self, id: RequestId) -> Option<usize> {
        self.ids.iter().position(|&x| x == id)
    }
}
