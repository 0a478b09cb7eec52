//! Read-only memory summaries: per-identity counts plus eligibility and
//! age histograms.

use serde::Serialize;

use crate::memory::{IdentityId, Memory};

/// Histogram bucket over a real-valued quantity. The last bucket includes
/// its upper edge so that eligibility 1.0 is representable.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValueBucket {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

/// Histogram bucket over frame ages. `hi = None` marks the open-ended
/// overflow bucket.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AgeBucket {
    pub lo: u64,
    pub hi: Option<u64>,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdentityCount {
    pub identity: IdentityId,
    pub count: usize,
}

/// Summary of a memory at one instant.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MemoryStats {
    pub elements: usize,
    pub frame_counter: u64,
    pub next_identity: IdentityId,
    /// Element counts per identity, ascending by identity. Sums to
    /// `elements`.
    pub identities: Vec<IdentityCount>,
    pub eligibility: Vec<ValueBucket>,
    /// Age is measured from insertion: `frame_counter - inserted_at`.
    pub age: Vec<AgeBucket>,
}

/// Histogram bucket edges. Eligibility edges define `len - 1` buckets;
/// age edges define `len` buckets, the last one open-ended.
#[derive(Debug, Clone)]
pub struct StatsOptions {
    pub eligibility_edges: Vec<f64>,
    pub age_edges: Vec<u64>,
}

impl Default for StatsOptions {
    fn default() -> Self {
        StatsOptions {
            eligibility_edges: (0..=10).map(|i| f64::from(i) / 10.0).collect(),
            age_edges: vec![0, 1, 2, 5, 10, 25, 50, 100, 250, 500],
        }
    }
}

pub fn stats(memory: &Memory) -> MemoryStats {
    stats_with(memory, &StatsOptions::default())
}

pub fn stats_with(memory: &Memory, options: &StatsOptions) -> MemoryStats {
    let mut counts: Vec<(IdentityId, usize)> = Vec::new();
    for el in memory.elements() {
        match counts.binary_search_by_key(&el.identity, |(id, _)| *id) {
            Ok(i) => counts[i].1 += 1,
            Err(i) => counts.insert(i, (el.identity, 1)),
        }
    }
    let identities = counts
        .into_iter()
        .map(|(identity, count)| IdentityCount { identity, count })
        .collect();

    let edges = &options.eligibility_edges;
    let mut eligibility: Vec<ValueBucket> = edges
        .windows(2)
        .map(|w| ValueBucket {
            lo: w[0],
            hi: w[1],
            count: 0,
        })
        .collect();
    for el in memory.elements() {
        if let Some(i) = value_bucket_index(edges, el.eligibility) {
            eligibility[i].count += 1;
        }
    }

    let age_edges = &options.age_edges;
    let mut age: Vec<AgeBucket> = age_edges
        .windows(2)
        .map(|w| AgeBucket {
            lo: w[0],
            hi: Some(w[1]),
            count: 0,
        })
        .collect();
    if let Some(&last) = age_edges.last() {
        age.push(AgeBucket {
            lo: last,
            hi: None,
            count: 0,
        });
    }
    for el in memory.elements() {
        let a = memory.frame_counter().saturating_sub(el.inserted_at);
        let i = age_bucket_index(age_edges, a);
        age[i].count += 1;
    }

    MemoryStats {
        elements: memory.len(),
        frame_counter: memory.frame_counter(),
        next_identity: memory.next_identity(),
        identities,
        eligibility,
        age,
    }
}

/// Bucket index for `v` against ascending edges: `[e[i], e[i+1])`, last
/// bucket closed on the right. Values outside the range land in the end
/// buckets.
fn value_bucket_index(edges: &[f64], v: f64) -> Option<usize> {
    if edges.len() < 2 {
        return None;
    }
    let n = edges.len() - 1;
    for i in 0..n {
        if v < edges[i + 1] {
            return Some(i);
        }
    }
    Some(n - 1)
}

fn age_bucket_index(edges: &[u64], a: u64) -> usize {
    for (i, w) in edges.windows(2).enumerate() {
        if a < w[1] {
            return i;
        }
    }
    edges.len().saturating_sub(1) // overflow bucket
}
