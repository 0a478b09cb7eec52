//! Streaming identity memory.
//!
//! `renn-core` ingests frames of feature descriptors and accumulates
//! per-identity descriptor collections without supervision. Matching runs
//! in the reverse direction of a classic ratio test: every stored
//! descriptor searches for its two nearest observations in the incoming
//! frame and matches when the distance ratio falls below a threshold.
//! Matched descriptors decay a per-element eligibility score
//! proportionally to that ratio; elements falling below an eligibility
//! floor (redundant) or unmatched for too long (unrepeatable) are pruned,
//! which keeps the memory bounded while the per-identity collections
//! converge toward the underlying descriptor distributions.
//!
//! The crate also ships a seeded synthetic-stream generator and the two
//! evaluation harnesses used by the acceptance suite: a 1D inlier/outlier
//! stability experiment and a multipass precision/recall benchmark.
//!
//! ```
//! use renn_core::{Config, Descriptor, Engine, Frame};
//!
//! let mut engine = Engine::new(Config::new(1)).unwrap();
//! let frame = Frame::new(1, vec![
//!     Descriptor::new(vec![0.02]).unwrap(),
//!     Descriptor::new(vec![5.10]).unwrap(),
//! ]);
//! let report = engine.observe(&frame).unwrap();
//! assert_eq!(report.new_identities.len(), 2);
//! ```

pub mod config;
pub mod engine;
pub mod error;
pub mod knn;
pub mod memctl;
pub mod memory;
pub mod renn;
pub mod snapshot;
pub mod stats;
pub mod synth;

pub use config::Config;
pub use engine::{Assignment, Engine, FrameReport};
pub use error::{Error, Result};
pub use knn::TwoNearest;
pub use memctl::{DecayEvent, PruneReport};
pub use memory::{Descriptor, Frame, IdentityId, Memory, MemoryElement};
pub use renn::{AssignmentResult, Conflict, MatchEntry, MatchSet, ObservationOutcome};
pub use stats::{MemoryStats, StatsOptions};
