//! Exact nearest-neighbour primitives: Euclidean distance and batch
//! first/second nearest search by linear scan.
//!
//! The distance-ratio test depends on exact first and second distances, so
//! there is deliberately no approximate index here. Batch searches fan out
//! across a rayon pool; each row is computed independently and sequentially,
//! so results never depend on the worker count.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::memory::Descriptor;

/// First and second nearest points to one query, with tie-breaks toward the
/// lowest point index.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TwoNearest {
    pub first_index: usize,
    pub first_distance: f64,
    /// `usize::MAX` when the search ran against a single point under the
    /// absolute-gate fallback; `second_distance` is then infinite.
    pub second_index: usize,
    pub second_distance: f64,
}

impl TwoNearest {
    /// Distance ratio `d1 / d2` in [0, 1].
    ///
    /// A zero first distance yields 0 even when the second distance is also
    /// zero: a perfect duplicate is the strongest possible match.
    pub fn ratio(&self) -> f64 {
        if self.first_distance == 0.0 {
            0.0
        } else {
            self.first_distance / self.second_distance
        }
    }
}

/// Euclidean distance between two descriptors of equal dimension.
pub fn distance(a: &Descriptor, b: &Descriptor) -> Result<f64> {
    if a.dimension() != b.dimension() {
        return Err(Error::DimensionMismatch {
            expected: a.dimension(),
            got: b.dimension(),
        });
    }
    let sum = a
        .values()
        .iter()
        .zip(b.values())
        .map(|(x, y)| {
            let d = x - y;
            d * d
        })
        .sum::<f64>();
    Ok(sum.sqrt())
}

/// Indices and distances of the two points nearest to `query`.
///
/// Requires at least two points. Equal distances break toward the lowest
/// point index, which makes the result deterministic.
pub fn two_nearest(query: &Descriptor, points: &[Descriptor]) -> Result<TwoNearest> {
    if points.len() < 2 {
        return Err(Error::InsufficientPoints { got: points.len() });
    }
    let mut first = (usize::MAX, f64::INFINITY);
    let mut second = (usize::MAX, f64::INFINITY);
    for (i, p) in points.iter().enumerate() {
        let d = distance(query, p)?;
        if d < first.1 {
            second = first;
            first = (i, d);
        } else if d < second.1 {
            second = (i, d);
        }
    }
    Ok(TwoNearest {
        first_index: first.0,
        first_distance: first.1,
        second_index: second.0,
        second_distance: second.1,
    })
}

/// `two_nearest` for every query, in query order.
///
/// Queries are partitioned across the current rayon pool; the output order
/// and every value are identical for any worker count.
pub fn batch_two_nearest(queries: &[Descriptor], points: &[Descriptor]) -> Result<Vec<TwoNearest>> {
    if points.len() < 2 {
        return Err(Error::InsufficientPoints { got: points.len() });
    }
    queries.par_iter().map(|q| two_nearest(q, points)).collect()
}
