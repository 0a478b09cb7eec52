//! Domain types: descriptors, identities, memory elements and the memory
//! container itself.

use serde::{Deserialize, Serialize};

use crate::config::Config;
use crate::error::{Error, Result};

/// A fixed-dimension real feature vector, the unit of observation.
///
/// Components are guaranteed finite by construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Descriptor(Vec<f64>);

impl Descriptor {
    /// Build a descriptor, rejecting empty vectors and non-finite components.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::DimensionMismatch {
                expected: 1,
                got: 0,
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Descriptor(values))
    }

    pub fn dimension(&self) -> usize {
        self.0.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    /// L2-normalized copy. Fails on a zero vector.
    pub fn normalized(&self) -> Result<Self> {
        let norm = self.0.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::ZeroNorm);
        }
        Ok(Descriptor(self.0.iter().map(|v| v / norm).collect()))
    }
}

impl TryFrom<Vec<f64>> for Descriptor {
    type Error = Error;

    fn try_from(values: Vec<f64>) -> Result<Self> {
        Descriptor::new(values)
    }
}

impl From<Descriptor> for Vec<f64> {
    fn from(d: Descriptor) -> Vec<f64> {
        d.0
    }
}

/// Identity label, assigned incrementally from 0 and never reused within a
/// session.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct IdentityId(pub u64);

impl std::fmt::Display for IdentityId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// One stored descriptor together with its identity and bookkeeping state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemoryElement {
    pub descriptor: Descriptor,
    pub identity: IdentityId,
    /// In (0, 1]. Set to 1 on insertion, multiplied by the decay factor at
    /// every match.
    pub eligibility: f64,
    /// Frame index at which the element entered the memory.
    pub inserted_at: u64,
    /// Frame index of the most recent match (insertion counts as a match).
    pub last_matched_at: u64,
}

/// The session memory: a flat, ordered collection of elements plus the
/// identity counter and the stream clock.
///
/// The engine's per-frame commit is the normal writer; [`Memory::insert`]
/// is public so callers can seed states directly.
#[derive(Debug, Clone, PartialEq)]
pub struct Memory {
    pub(crate) elements: Vec<MemoryElement>,
    pub(crate) next_identity: IdentityId,
    pub(crate) frame_counter: u64,
}

impl Memory {
    /// Empty memory for a validated config. The stream clock starts at 0,
    /// which denotes "no frame observed yet"; frame indices start at 1.
    pub fn new(config: &Config) -> Result<Self> {
        config.validate()?;
        Ok(Memory {
            elements: Vec::new(),
            next_identity: IdentityId(0),
            frame_counter: 0,
        })
    }

    pub fn elements(&self) -> &[MemoryElement] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn next_identity(&self) -> IdentityId {
        self.next_identity
    }

    pub fn frame_counter(&self) -> u64 {
        self.frame_counter
    }

    /// Allocate a fresh identity.
    pub fn mint_identity(&mut self) -> IdentityId {
        let id = self.next_identity;
        self.next_identity = IdentityId(id.0 + 1);
        id
    }

    /// Append an element, keeping `next_identity` ahead of every stored id.
    ///
    /// Panics if the element violates its own invariants (eligibility out of
    /// (0, 1], or a match recorded before insertion).
    pub fn insert(&mut self, element: MemoryElement) {
        assert!(
            element.eligibility > 0.0 && element.eligibility <= 1.0,
            "eligibility must lie in (0, 1]"
        );
        assert!(
            element.last_matched_at >= element.inserted_at,
            "last_matched_at must not precede inserted_at"
        );
        if element.identity.0 >= self.next_identity.0 {
            self.next_identity = IdentityId(element.identity.0 + 1);
        }
        self.elements.push(element);
    }

    pub(crate) fn set_frame_counter(&mut self, t: u64) {
        self.frame_counter = t;
    }
}

/// A timestamped batch of observed descriptors.
///
/// `labels` carries optional ground truth for evaluation harnesses; the
/// learner itself never reads it.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub index: u64,
    pub observations: Vec<Descriptor>,
    pub labels: Option<Vec<String>>,
}

impl Frame {
    pub fn new(index: u64, observations: Vec<Descriptor>) -> Self {
        Frame {
            index,
            observations,
            labels: None,
        }
    }

    pub fn with_labels(index: u64, observations: Vec<Descriptor>, labels: Vec<String>) -> Self {
        Frame {
            index,
            observations,
            labels: Some(labels),
        }
    }

    /// Copy of the frame with every observation L2-normalized.
    pub fn normalized(&self) -> Result<Self> {
        let observations = self
            .observations
            .iter()
            .map(Descriptor::normalized)
            .collect::<Result<Vec<_>>>()?;
        Ok(Frame {
            index: self.index,
            observations,
            labels: self.labels.clone(),
        })
    }
}

/// Shorthand used throughout tests and examples.
pub fn descriptor(values: &[f64]) -> Descriptor {
    Descriptor::new(values.to_vec()).expect("finite, non-empty descriptor")
}
