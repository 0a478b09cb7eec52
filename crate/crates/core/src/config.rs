//! Session configuration.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Parameters of one learning session.
///
/// All thresholds are fixed for the lifetime of a stream; there is no
/// mid-stream reconfiguration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Config {
    /// Distance-ratio acceptance threshold, in (0, 1]. A memory element
    /// matches a frame only when the ratio of its first to its second
    /// nearest observation distance falls strictly below this value.
    pub rho_bar: f64,
    /// Eligibility removal threshold, in (0, 1). Elements whose eligibility
    /// drops strictly below it are pruned at frame commit.
    pub e_bar: f64,
    /// Exponent applied to the distance ratio in the decay factor, >= 1.
    /// Larger values punish confident (low-ratio) matches harder.
    pub alpha: f64,
    /// Maximum number of frames an element may go unmatched before it is
    /// pruned as stale.
    pub max_stale: u64,
    /// Descriptor dimension, fixed per session.
    pub dimension: usize,
    /// Absolute distance gate used only for single-observation frames,
    /// where the ratio test is undefined. `None` disables matching on
    /// such frames entirely.
    pub abs_gate: Option<f64>,
    /// L2-normalize every descriptor on ingest. Turns the Euclidean metric
    /// into a monotone function of cosine distance.
    pub normalize: bool,
    /// Seed for randomized tooling (synthetic streams). The engine itself
    /// is deterministic and never draws random numbers.
    pub seed: u64,
}

impl Config {
    /// Default thresholds for a session of the given descriptor dimension:
    /// `rho_bar = 0.8`, `e_bar = 0.1`, `alpha = 1`, `max_stale = 300`.
    pub fn new(dimension: usize) -> Self {
        Config {
            rho_bar: 0.8,
            e_bar: 0.1,
            alpha: 1.0,
            max_stale: 300,
            dimension,
            abs_gate: None,
            normalize: false,
            seed: 0,
        }
    }

    /// Check every parameter bound.
    pub fn validate(&self) -> Result<()> {
        if !self.rho_bar.is_finite() || self.rho_bar <= 0.0 || self.rho_bar > 1.0 {
            return Err(Error::Config(format!(
                "rho_bar must lie in (0, 1], got {}",
                self.rho_bar
            )));
        }
        if !self.e_bar.is_finite() || self.e_bar <= 0.0 || self.e_bar >= 1.0 {
            return Err(Error::Config(format!(
                "e_bar must lie in (0, 1), got {}",
                self.e_bar
            )));
        }
        if !self.alpha.is_finite() || self.alpha < 1.0 {
            return Err(Error::Config(format!(
                "alpha must be >= 1, got {}",
                self.alpha
            )));
        }
        if self.max_stale == 0 {
            return Err(Error::Config("max_stale must be positive".into()));
        }
        if self.dimension == 0 {
            return Err(Error::Config("dimension must be >= 1".into()));
        }
        if let Some(gate) = self.abs_gate {
            if !gate.is_finite() || gate <= 0.0 {
                return Err(Error::Config(format!(
                    "abs_gate must be a positive finite number, got {gate}"
                )));
            }
        }
        Ok(())
    }

    /// Fingerprint of the behaviour-affecting fields (everything except
    /// `seed`). Stored in snapshot headers so a resumed session cannot
    /// silently run under different thresholds.
    pub fn digest(&self) -> u64 {
        fnv1a64(&self.behaviour_bytes())
    }

    /// Canonical little-endian encoding of the fields covered by `digest`.
    pub(crate) fn behaviour_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(50);
        out.extend_from_slice(&self.rho_bar.to_bits().to_le_bytes());
        out.extend_from_slice(&self.e_bar.to_bits().to_le_bytes());
        out.extend_from_slice(&self.alpha.to_bits().to_le_bytes());
        out.extend_from_slice(&self.max_stale.to_le_bytes());
        out.extend_from_slice(&(self.dimension as u64).to_le_bytes());
        match self.abs_gate {
            Some(g) => {
                out.push(1);
                out.extend_from_slice(&g.to_bits().to_le_bytes());
            }
            None => {
                out.push(0);
                out.extend_from_slice(&0u64.to_le_bytes());
            }
        }
        out.push(u8::from(self.normalize));
        out
    }
}

/// FNV-1a 64-bit hash. Not cryptographic; used only as a format fingerprint.
fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}
