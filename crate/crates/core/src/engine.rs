//! Per-frame orchestration: match, assign, decay, prune, insert.
//!
//! Each observed frame is applied as one atomic commit. Validation and the
//! read-only match phase run against the memory as it stood before the
//! frame; a frame that fails validation leaves the memory untouched. The
//! commit order is fixed: decay matched elements, prune (eligibility first,
//! then staleness), then insert every observation with eligibility 1;
//! newborn elements cannot be pruned in their birth frame.

use serde::Serialize;

use crate::config::Config;
use crate::error::{Error, Result};
use crate::memctl::{self, DecayEvent, PruneReport};
use crate::memory::{Frame, IdentityId, Memory, MemoryElement};
use crate::renn::{self, Conflict, ObservationOutcome};
use crate::snapshot;
use crate::stats::{self, MemoryStats, StatsOptions};

/// Final per-observation outcome, with new identities already minted.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum Assignment {
    /// Matched an existing identity through the given memory element.
    Existing {
        identity: IdentityId,
        memory_index: usize,
        distance: f64,
    },
    /// Started a fresh identity.
    New { identity: IdentityId },
}

impl Assignment {
    pub fn identity(&self) -> IdentityId {
        match self {
            Assignment::Existing { identity, .. } | Assignment::New { identity } => *identity,
        }
    }
}

/// Audit record of one committed frame. Memory indices refer to the memory
/// as it stood when the frame was matched (after decay, before pruning).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrameReport {
    pub frame_index: u64,
    /// One entry per observation, in observation order.
    pub assignments: Vec<Assignment>,
    /// Identities minted this frame, in observation order.
    pub new_identities: Vec<IdentityId>,
    pub decay_events: Vec<DecayEvent>,
    pub prune_report: PruneReport,
    pub memory_size_after: usize,
    pub conflicts: Vec<Conflict>,
}

/// Apply one frame to a memory. See the module docs for the commit order.
pub fn observe(memory: &mut Memory, frame: &Frame, config: &Config) -> Result<FrameReport> {
    if frame.index <= memory.frame_counter() {
        return Err(Error::StreamOrder {
            clock: memory.frame_counter(),
            frame: frame.index,
        });
    }
    for obs in &frame.observations {
        if obs.dimension() != config.dimension {
            return Err(Error::DimensionMismatch {
                expected: config.dimension,
                got: obs.dimension(),
            });
        }
    }
    let normalized;
    let frame = if config.normalize {
        normalized = frame.normalized()?;
        &normalized
    } else {
        frame
    };

    // Read-only phase against the pre-frame memory.
    let match_set = renn::match_frame(memory, frame, config)?;
    let assignment = renn::assign_identities(&match_set, memory, frame);

    // Commit phase: infallible from here on.
    memory.set_frame_counter(frame.index);
    let decay_events = memctl::apply_decay(memory, &match_set, config);
    let prune_report = memctl::prune(memory, config);

    let mut assignments = Vec::with_capacity(frame.observations.len());
    let mut new_identities = Vec::new();
    for (k, outcome) in assignment.outcomes.iter().enumerate() {
        let resolved = match outcome {
            ObservationOutcome::Existing {
                identity,
                memory_index,
                distance,
            } => Assignment::Existing {
                identity: *identity,
                memory_index: *memory_index,
                distance: *distance,
            },
            ObservationOutcome::NewIdentity => {
                let identity = memory.mint_identity();
                new_identities.push(identity);
                Assignment::New { identity }
            }
        };
        memory.insert(MemoryElement {
            descriptor: frame.observations[k].clone(),
            identity: resolved.identity(),
            eligibility: 1.0,
            inserted_at: frame.index,
            last_matched_at: frame.index,
        });
        assignments.push(resolved);
    }

    Ok(FrameReport {
        frame_index: frame.index,
        assignments,
        new_identities,
        decay_events,
        prune_report,
        memory_size_after: memory.len(),
        conflicts: assignment.conflicts,
    })
}

/// One learning session: a memory plus its immutable config.
///
/// The engine is the single writer of its memory. It can be moved between
/// threads, but a frame commit requires exclusive access; read-only search
/// inside a commit fans out across the current rayon pool.
#[derive(Debug, Clone, PartialEq)]
pub struct Engine {
    config: Config,
    memory: Memory,
}

impl Engine {
    /// Fresh session. Fails on an invalid config.
    pub fn new(config: Config) -> Result<Self> {
        let memory = Memory::new(&config)?;
        Ok(Engine { config, memory })
    }

    pub fn config(&self) -> &Config {
        &self.config
    }

    pub fn memory(&self) -> &Memory {
        &self.memory
    }

    /// Apply one frame; see [`observe`].
    pub fn observe(&mut self, frame: &Frame) -> Result<FrameReport> {
        observe(&mut self.memory, frame, &self.config)
    }

    /// Byte-stable serialization of the session state.
    pub fn snapshot(&self) -> Vec<u8> {
        snapshot::write_snapshot(&self.memory, &self.config)
    }

    /// Rebuild a session from snapshot bytes, adopting the embedded config.
    pub fn restore(bytes: &[u8]) -> Result<Self> {
        let (memory, config) = snapshot::read_snapshot(bytes)?;
        Ok(Engine { config, memory })
    }

    /// Rebuild a session, requiring the snapshot config to match `expected`
    /// in every behaviour-affecting field (the seed may differ).
    pub fn restore_with(bytes: &[u8], expected: &Config) -> Result<Self> {
        let engine = Self::restore(bytes)?;
        if engine.config.digest() != expected.digest() {
            return Err(Error::SnapshotConfigMismatch);
        }
        Ok(engine)
    }

    pub fn stats(&self) -> MemoryStats {
        stats::stats(&self.memory)
    }

    pub fn stats_with(&self, options: &StatsOptions) -> MemoryStats {
        stats::stats_with(&self.memory, options)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::memory::descriptor;

    fn frame(index: u64, xs: &[f64]) -> Frame {
        Frame::new(index, xs.iter().map(|&x| descriptor(&[x])).collect())
    }

    #[test]
    fn cold_start_mints_one_identity_per_observation() {
        let mut engine = Engine::new(Config::new(1)).unwrap();
        let report = engine.observe(&frame(1, &[0.0, 5.0])).unwrap();
        assert_eq!(report.new_identities, vec![IdentityId(0), IdentityId(1)]);
        assert_eq!(report.memory_size_after, 2);
        assert!(report.decay_events.is_empty());
        assert_eq!(report.prune_report.removed_count(), 0);
        assert_eq!(engine.memory().frame_counter(), 1);
    }

    #[test]
    fn seeded_cluster_absorbs_near_observation_and_decays() {
        let mut engine = Engine::new(Config::new(1)).unwrap();
        for x in [-0.01, -0.005, 0.0, 0.005, 0.01] {
            engine.memory.insert(MemoryElement {
                descriptor: descriptor(&[x]),
                identity: IdentityId(0),
                eligibility: 1.0,
                inserted_at: 0,
                last_matched_at: 0,
            });
        }
        let report = engine.observe(&frame(1, &[0.005, 9.0])).unwrap();
        // Observation 0 joins the cluster identity, observation 1 is new.
        assert_eq!(report.assignments[0].identity(), IdentityId(0));
        assert!(matches!(
            report.assignments[1],
            Assignment::New {
                identity: IdentityId(1)
            }
        ));
        // All five clustered elements matched observation 0 and decayed.
        assert_eq!(report.decay_events.len(), 5);
        for event in &report.decay_events {
            assert!(event.eligibility_after < event.eligibility_before);
        }
        assert_eq!(
            report.memory_size_after,
            5 + 2 - report.prune_report.removed_count()
        );
    }

    #[test]
    fn streamed_cluster_keeps_its_identity() {
        // A drifting pair streamed through the engine: the near cluster
        // keeps inheriting identity 0, the far one identity 1.
        let mut engine = Engine::new(Config::new(1)).unwrap();
        for (i, x) in [-0.01, -0.005, 0.0, 0.005, 0.01].iter().enumerate() {
            engine
                .observe(&frame(i as u64 + 1, &[*x, 9.0 + i as f64 * 1e-3]))
                .unwrap();
        }
        let before = engine.memory().len();
        let report = engine.observe(&frame(6, &[0.005, 20.0])).unwrap();
        assert_eq!(report.assignments[0].identity(), IdentityId(0));
        assert!(matches!(report.assignments[1], Assignment::New { .. }));
        assert!(!report.decay_events.is_empty());
        assert_eq!(
            report.memory_size_after,
            before + 2 - report.prune_report.removed_count()
        );
    }

    #[test]
    fn decay_below_threshold_prunes_same_frame() {
        let config = Config::new(1);
        let mut engine = Engine::new(config).unwrap();
        engine.memory.insert(MemoryElement {
            descriptor: descriptor(&[0.0]),
            identity: IdentityId(0),
            eligibility: 0.12,
            inserted_at: 0,
            last_matched_at: 0,
        });
        // Geometry gives eta = 0.5 exactly: 0.12 * 0.5 = 0.06 < 0.1.
        let report = engine.observe(&frame(1, &[0.4, 1.0])).unwrap();
        assert_eq!(report.decay_events.len(), 1);
        assert_eq!(report.decay_events[0].eta, 0.5);
        assert_eq!(report.prune_report.removed_by_eligibility, vec![0]);
        // Both observations inserted; the seeded element is gone.
        assert_eq!(report.memory_size_after, 2);
        assert_eq!(report.assignments[0].identity(), IdentityId(0));
    }

    #[test]
    fn non_monotonic_frame_rejected_without_mutation() {
        let mut engine = Engine::new(Config::new(1)).unwrap();
        engine.observe(&frame(5, &[0.0, 1.0])).unwrap();
        let copy = engine.clone();
        let err = engine.observe(&frame(5, &[0.0, 1.0]));
        assert!(matches!(
            err,
            Err(Error::StreamOrder { clock: 5, frame: 5 })
        ));
        assert_eq!(engine, copy);
    }

    #[test]
    fn dimension_mismatch_rejected_without_mutation() {
        let mut engine = Engine::new(Config::new(1)).unwrap();
        engine.observe(&frame(1, &[0.0, 1.0])).unwrap();
        let copy = engine.clone();
        let bad = Frame::new(2, vec![descriptor(&[0.0, 0.0])]);
        assert!(matches!(
            engine.observe(&bad),
            Err(Error::DimensionMismatch {
                expected: 1,
                got: 2
            })
        ));
        assert_eq!(engine, copy);
    }

    #[test]
    fn empty_frame_advances_clock_and_prunes_stale() {
        let mut engine = Engine::new(Config::new(1)).unwrap();
        engine.observe(&frame(1, &[0.0, 9.0])).unwrap();
        // 301 frames later with no observations, both elements go stale.
        let report = engine.observe(&Frame::new(302, vec![])).unwrap();
        assert_eq!(report.prune_report.removed_by_staleness, vec![0, 1]);
        assert_eq!(report.memory_size_after, 0);
        assert_eq!(engine.memory().frame_counter(), 302);
    }

    #[test]
    fn single_observation_frame_without_gate_starts_new_identity() {
        let mut engine = Engine::new(Config::new(1)).unwrap();
        engine.observe(&frame(1, &[0.0, 9.0])).unwrap();
        let report = engine.observe(&frame(2, &[0.001])).unwrap();
        assert!(matches!(report.assignments[0], Assignment::New { .. }));
    }

    #[test]
    fn single_observation_frame_with_gate_matches() {
        let mut config = Config::new(1);
        config.abs_gate = Some(0.5);
        let mut engine = Engine::new(config).unwrap();
        engine.observe(&frame(1, &[0.0, 9.0])).unwrap();
        let report = engine.observe(&frame(2, &[0.1])).unwrap();
        assert_eq!(report.assignments[0].identity(), IdentityId(0));
        // Gate matches decay at the eta floor and fall below e_bar.
        assert_eq!(report.decay_events[0].eta, memctl::ETA_FLOOR);
        assert_eq!(report.prune_report.removed_by_eligibility, vec![0]);
    }

    #[test]
    fn normalization_flag_stores_unit_vectors() {
        let mut config = Config::new(2);
        config.normalize = true;
        let mut engine = Engine::new(config).unwrap();
        engine
            .observe(&Frame::new(
                1,
                vec![descriptor(&[3.0, 4.0]), descriptor(&[-8.0, 6.0])],
            ))
            .unwrap();
        for el in engine.memory().elements() {
            let norm: f64 = el.descriptor.values().iter().map(|v| v * v).sum();
            assert!((norm - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_norm_with_normalization_is_rejected() {
        let mut config = Config::new(1);
        config.normalize = true;
        let mut engine = Engine::new(config).unwrap();
        let err = engine.observe(&frame(1, &[0.0, 1.0]));
        assert!(matches!(err, Err(Error::ZeroNorm)));
    }

    #[test]
    fn reports_and_state_are_deterministic() {
        let run = || {
            let mut engine = Engine::new(Config::new(1)).unwrap();
            let mut reports = Vec::new();
            for t in 1..=50u64 {
                let x = (t as f64 * 0.37).sin() * 0.01;
                reports.push(engine.observe(&frame(t, &[x, 5.0 + x])).unwrap());
            }
            (reports, engine.snapshot())
        };
        let (r1, s1) = run();
        let (r2, s2) = run();
        assert_eq!(r1, r2);
        assert_eq!(s1, s2);
    }

    #[test]
    fn snapshot_round_trip_equals_original() {
        let mut engine = Engine::new(Config::new(1)).unwrap();
        for t in 1..=10u64 {
            engine.observe(&frame(t, &[t as f64 * 0.001, 5.0])).unwrap();
        }
        let restored = Engine::restore(&engine.snapshot()).unwrap();
        assert_eq!(restored, engine);
    }

    #[test]
    fn restore_with_guards_config() {
        let engine = Engine::new(Config::new(2)).unwrap();
        let bytes = engine.snapshot();
        let mut other = Config::new(3);
        assert!(matches!(
            Engine::restore_with(&bytes, &other),
            Err(Error::SnapshotConfigMismatch)
        ));
        other = Config::new(2);
        other.rho_bar = 0.7;
        assert!(matches!(
            Engine::restore_with(&bytes, &other),
            Err(Error::SnapshotConfigMismatch)
        ));
        let mut same = Config::new(2);
        same.seed = 42; // seed may differ
        assert!(Engine::restore_with(&bytes, &same).is_ok());
    }

    #[test]
    fn committed_memory_respects_thresholds() {
        let config = Config::new(1);
        let mut engine = Engine::new(config.clone()).unwrap();
        for t in 1..=400u64 {
            let x = (t as f64 * 0.11).cos() * 0.05;
            engine.observe(&frame(t, &[x, 4.0 + x])).unwrap();
            for el in engine.memory().elements() {
                assert!(el.eligibility >= config.e_bar);
                assert!(engine.memory().frame_counter() - el.last_matched_at <= config.max_stale);
                assert!(el.last_matched_at >= el.inserted_at);
            }
        }
    }

    #[test]
    fn identities_reported_are_prefix_closed() {
        let mut engine = Engine::new(Config::new(1)).unwrap();
        let mut seen = std::collections::HashSet::new();
        for t in 1..=100u64 {
            let a = (t % 7) as f64 * 0.5;
            let b = 10.0 + (t % 3) as f64 * 0.5;
            let report = engine.observe(&frame(t, &[a, b])).unwrap();
            for assignment in &report.assignments {
                seen.insert(assignment.identity().0);
            }
        }
        let next = engine.memory().next_identity().0;
        assert!(seen.iter().all(|&id| id < next));
        // Every identity below some observed one was itself observed.
        let max = seen.iter().copied().max().unwrap();
        for id in 0..=max {
            assert!(seen.contains(&id), "identity {id} skipped");
        }
    }
}
