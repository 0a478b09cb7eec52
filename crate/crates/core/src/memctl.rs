//! Eligibility dynamics and memory pruning.
//!
//! Every element starts with eligibility 1. Each time it matches, its
//! eligibility is multiplied by a decay factor `eta = (d1/d2)^alpha /
//! rho_bar`, which is strictly below 1 for any matched element whenever
//! `rho_bar <= 1` and `alpha >= 1`, so repeated matching contracts the
//! eligibility toward 0. Elements falling strictly below `e_bar` are
//! redundant and get pruned; elements unmatched for more than `max_stale`
//! frames are presumed unrepeatable and get pruned as stale.

use serde::Serialize;

use crate::config::Config;
use crate::knn::TwoNearest;
use crate::memory::Memory;
use crate::renn::MatchSet;

/// Lower bound on the applied decay factor. A zero first distance (exact
/// duplicate, or the missing second neighbour of a gate match) would give
/// `eta = 0`; the floor keeps eligibility positive while still far below
/// any reasonable removal threshold.
pub const ETA_FLOOR: f64 = 1e-3;

/// Audit record of one eligibility update.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayEvent {
    pub memory_index: usize,
    /// Applied decay factor, in [ETA_FLOOR, 1).
    pub eta: f64,
    pub eligibility_before: f64,
    pub eligibility_after: f64,
}

/// Elements removed at one frame commit, as indices into the memory as it
/// stood after decay and before any removal. The two lists are disjoint;
/// an element failing both tests is attributed to the eligibility list.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct PruneReport {
    pub removed_by_eligibility: Vec<usize>,
    pub removed_by_staleness: Vec<usize>,
}

impl PruneReport {
    pub fn removed_count(&self) -> usize {
        self.removed_by_eligibility.len() + self.removed_by_staleness.len()
    }
}

/// Raw decay factor `(d1/d2)^alpha / rho_bar`.
///
/// Callers must guarantee `0 <= d1 <= d2` and `d2 > 0`; the zero-`d2` case
/// (perfect duplicates) is handled upstream by [`effective_eta`].
pub fn decay_factor(d1: f64, d2: f64, config: &Config) -> f64 {
    debug_assert!(d2 > 0.0, "decay_factor requires d2 > 0");
    debug_assert!(d1 <= d2, "decay_factor requires d1 <= d2");
    (d1 / d2).powf(config.alpha) / config.rho_bar
}

/// Decay factor actually applied to a matched element: the raw factor,
/// floored at [`ETA_FLOOR`].
///
/// Handles the degenerate ratios the raw formula cannot: a zero first
/// distance and the infinite second-distance sentinel of gate matches both
/// yield the floor.
pub fn effective_eta(neighbours: &TwoNearest, config: &Config) -> f64 {
    let raw = if neighbours.first_distance == 0.0 || neighbours.second_distance.is_infinite() {
        0.0
    } else {
        decay_factor(
            neighbours.first_distance,
            neighbours.second_distance,
            config,
        )
    };
    raw.max(ETA_FLOOR)
}

/// Multiply each matched element's eligibility by its decay factor and
/// stamp it as matched at the current frame. Unmatched elements are
/// untouched. Returns one event per matched element, in memory order.
pub fn apply_decay(memory: &mut Memory, match_set: &MatchSet, config: &Config) -> Vec<DecayEvent> {
    let now = memory.frame_counter();
    let mut events = Vec::with_capacity(match_set.len());
    for entry in &match_set.entries {
        let eta = effective_eta(&entry.neighbours, config);
        let element = &mut memory.elements[entry.memory_index];
        let before = element.eligibility;
        let after = before * eta;
        element.eligibility = after;
        element.last_matched_at = now;
        events.push(DecayEvent {
            memory_index: entry.memory_index,
            eta,
            eligibility_before: before,
            eligibility_after: after,
        });
    }
    events
}

/// Remove every element whose eligibility is strictly below `e_bar`.
/// Returns the removed indices, relative to the memory as passed in.
pub fn prune_eligibility(memory: &mut Memory, config: &Config) -> Vec<usize> {
    let removed: Vec<usize> = memory
        .elements
        .iter()
        .enumerate()
        .filter(|(_, el)| el.eligibility < config.e_bar)
        .map(|(i, _)| i)
        .collect();
    remove_indices(memory, &removed);
    removed
}

/// Remove every element unmatched for strictly more than `max_stale`
/// frames, measured against the memory's stream clock. Returns the removed
/// indices, relative to the memory as passed in.
pub fn prune_stale(memory: &mut Memory, config: &Config) -> Vec<usize> {
    let now = memory.frame_counter();
    let removed: Vec<usize> = memory
        .elements
        .iter()
        .enumerate()
        .filter(|(_, el)| now.saturating_sub(el.last_matched_at) > config.max_stale)
        .map(|(i, _)| i)
        .collect();
    remove_indices(memory, &removed);
    removed
}

/// Both pruning passes against a single memory snapshot, eligibility first.
///
/// Equivalent to running [`prune_eligibility`] then [`prune_stale`], but
/// the reported indices all refer to the same pre-removal state, keeping
/// the two lists disjoint and meaningful in one frame report.
pub fn prune(memory: &mut Memory, config: &Config) -> PruneReport {
    let now = memory.frame_counter();
    let mut by_eligibility = Vec::new();
    let mut by_staleness = Vec::new();
    for (i, el) in memory.elements.iter().enumerate() {
        if el.eligibility < config.e_bar {
            by_eligibility.push(i);
        } else if now.saturating_sub(el.last_matched_at) > config.max_stale {
            by_staleness.push(i);
        }
    }
    let mut all = Vec::with_capacity(by_eligibility.len() + by_staleness.len());
    all.extend_from_slice(&by_eligibility);
    all.extend_from_slice(&by_staleness);
    all.sort_unstable();
    remove_indices(memory, &all);
    PruneReport {
        removed_by_eligibility: by_eligibility,
        removed_by_staleness: by_staleness,
    }
}

/// Drop the elements at the given ascending indices.
fn remove_indices(memory: &mut Memory, sorted: &[usize]) {
    if sorted.is_empty() {
        return;
    }
    let mut cursor = 0usize;
    let mut index = 0usize;
    memory.elements.retain(|_| {
        let drop = cursor < sorted.len() && sorted[cursor] == index;
        if drop {
            cursor += 1;
        }
        index += 1;
        !drop
    });
}
