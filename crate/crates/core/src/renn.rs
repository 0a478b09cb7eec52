//! Reverse nearest neighbour matching and per-observation identity
//! assignment.
//!
//! The matching direction is inverted with respect to a classic ratio test:
//! every *memory* element queries the small set of observations in the
//! current frame. When a subject has been seen many times, its stored
//! descriptors are near-duplicates of each other and a forward ratio test
//! degenerates (first and second memory neighbours of a new observation are
//! almost equidistant). Reversing the roles keeps the test discriminative:
//! each stored descriptor is close to one observation and far from the
//! others.

use rayon::prelude::*;

use crate::config::Config;
use crate::error::{Error, Result};
use crate::knn::{self, TwoNearest};
use crate::memory::{Frame, IdentityId, Memory};

/// One memory element that passed the ratio test, with its two nearest
/// observations.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchEntry {
    pub memory_index: usize,
    pub neighbours: TwoNearest,
}

/// All memory elements matching the current frame. Indices are unique and
/// ascending.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MatchSet {
    pub entries: Vec<MatchEntry>,
}

impl MatchSet {
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }
}

/// Outcome of matching for a single observation, before new identities are
/// minted.
#[derive(Debug, Clone, PartialEq)]
pub enum ObservationOutcome {
    /// Supported by at least one matched element; carries the winning
    /// element and its distance.
    Existing {
        identity: IdentityId,
        memory_index: usize,
        distance: f64,
    },
    /// No matched element has this observation as its first neighbour.
    NewIdentity,
}

/// A non-winning identity competing for an observation.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct Contender {
    pub identity: IdentityId,
    pub distance: f64,
}

/// An observation supported by elements of more than one identity.
/// Reported for audit; identities are never merged.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct Conflict {
    pub observation: usize,
    pub contenders: Vec<Contender>,
}

/// Per-observation outcomes plus any identity conflicts.
#[derive(Debug, Clone, PartialEq)]
pub struct AssignmentResult {
    pub outcomes: Vec<ObservationOutcome>,
    pub conflicts: Vec<Conflict>,
}

/// Match every memory element against a frame of at least two observations.
///
/// An element enters the result exactly when the ratio of its first to its
/// second nearest observation distance is strictly below `rho_bar`. A 0/0
/// ratio (perfect duplicates) counts as a pass.
pub fn renn_match(memory: &Memory, frame: &Frame, config: &Config) -> Result<MatchSet> {
    if frame.observations.len() < 2 {
        return Err(Error::InsufficientPoints {
            got: frame.observations.len(),
        });
    }
    let rows: Vec<(usize, TwoNearest)> = memory
        .elements()
        .par_iter()
        .enumerate()
        .map(|(i, el)| knn::two_nearest(&el.descriptor, &frame.observations).map(|tn| (i, tn)))
        .collect::<Result<_>>()?;
    let entries = rows
        .into_iter()
        .filter(|(_, tn)| tn.ratio() < config.rho_bar)
        .map(|(memory_index, neighbours)| MatchEntry {
            memory_index,
            neighbours,
        })
        .collect();
    Ok(MatchSet { entries })
}

/// Matching for a single-observation frame, where the ratio test is
/// undefined.
///
/// With `abs_gate` configured, elements within the gate distance of the lone
/// observation match; the missing second neighbour is recorded as the
/// `usize::MAX` / `+inf` sentinel. Without a gate nothing matches and the
/// observation starts a new identity.
pub fn fallback_match(memory: &Memory, frame: &Frame, config: &Config) -> Result<MatchSet> {
    if frame.observations.len() != 1 {
        return Err(Error::InvalidArgument(format!(
            "fallback_match expects exactly 1 observation, got {}",
            frame.observations.len()
        )));
    }
    let Some(gate) = config.abs_gate else {
        return Ok(MatchSet::default());
    };
    let observation = &frame.observations[0];
    let mut entries = Vec::new();
    for (i, el) in memory.elements().iter().enumerate() {
        let d = knn::distance(&el.descriptor, observation)?;
        if d <= gate {
            entries.push(MatchEntry {
                memory_index: i,
                neighbours: TwoNearest {
                    first_index: 0,
                    first_distance: d,
                    second_index: usize::MAX,
                    second_distance: f64::INFINITY,
                },
            });
        }
    }
    Ok(MatchSet { entries })
}

/// Dispatch on the observation count: empty frames match nothing, single
/// observations go through the gate fallback, anything else through the
/// ratio test.
pub fn match_frame(memory: &Memory, frame: &Frame, config: &Config) -> Result<MatchSet> {
    match frame.observations.len() {
        0 => Ok(MatchSet::default()),
        1 => fallback_match(memory, frame, config),
        _ => renn_match(memory, frame, config),
    }
}

/// Assign each observation the identity of its closest supporting element.
///
/// A matched element supports the observation that is its first neighbour.
/// Among the supporters of one observation the element with the minimum
/// first distance wins (ties break toward the lowest memory index); other
/// distinct identities are reported as a conflict. Observations with no
/// supporters become new identities.
pub fn assign_identities(match_set: &MatchSet, memory: &Memory, frame: &Frame) -> AssignmentResult {
    let n_obs = frame.observations.len();
    let mut supporters: Vec<Vec<&MatchEntry>> = vec![Vec::new(); n_obs];
    for entry in &match_set.entries {
        debug_assert!(entry.memory_index < memory.len());
        debug_assert!(entry.neighbours.first_index < n_obs);
        supporters[entry.neighbours.first_index].push(entry);
    }

    let mut outcomes = Vec::with_capacity(n_obs);
    let mut conflicts = Vec::new();
    for (k, group) in supporters.iter().enumerate() {
        if group.is_empty() {
            outcomes.push(ObservationOutcome::NewIdentity);
            continue;
        }
        let winner = group
            .iter()
            .min_by(|a, b| {
                a.neighbours
                    .first_distance
                    .total_cmp(&b.neighbours.first_distance)
                    .then(a.memory_index.cmp(&b.memory_index))
            })
            .expect("non-empty supporter group");
        let winner_id = memory.elements()[winner.memory_index].identity;
        outcomes.push(ObservationOutcome::Existing {
            identity: winner_id,
            memory_index: winner.memory_index,
            distance: winner.neighbours.first_distance,
        });

        // Best distance per competing identity.
        let mut contenders: Vec<Contender> = Vec::new();
        for entry in group.iter() {
            let id = memory.elements()[entry.memory_index].identity;
            if id == winner_id {
                continue;
            }
            let d = entry.neighbours.first_distance;
            match contenders.iter_mut().find(|c| c.identity == id) {
                Some(c) => c.distance = c.distance.min(d),
                None => contenders.push(Contender {
                    identity: id,
                    distance: d,
                }),
            }
        }
        if !contenders.is_empty() {
            contenders.sort_by(|a, b| {
                a.distance
                    .total_cmp(&b.distance)
                    .then(a.identity.cmp(&b.identity))
            });
            conflicts.push(Conflict {
                observation: k,
                contenders,
            });
        }
    }
    AssignmentResult {
        outcomes,
        conflicts,
    }
}
