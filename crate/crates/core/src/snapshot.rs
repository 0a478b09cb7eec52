//! Versioned, byte-stable binary snapshot of a memory and its config.
//!
//! Layout, all integers and float bit patterns little-endian:
//!
//! ```text
//! offset  size  field
//! 0       8     magic "RENNSNAP"
//! 8       4     format version (u32, currently 1)
//! 12      4     dimension (u32)
//! 16      8     config digest (u64, FNV-1a over the config record
//!               excluding the seed)
//! 24      8     element count (u64)
//! 32      8     next identity (u64)
//! 40      8     frame counter (u64)
//! 48      58    config record: rho_bar f64, e_bar f64, alpha f64,
//!               max_stale u64, dimension u64, abs_gate flag u8 + f64,
//!               normalize u8, seed u64
//! 106     -     element records, element count times:
//!               identity u64, eligibility f64, inserted_at u64,
//!               last_matched_at u64, descriptor dimension × f64
//! ```
//!
//! Writing the same state twice produces identical bytes, which the
//! split/resume equivalence tests rely on.

use crate::config::Config;
use crate::error::{Error, Result};
use crate::memory::{Descriptor, IdentityId, Memory, MemoryElement};

pub const MAGIC: &[u8; 8] = b"RENNSNAP";
pub const FORMAT_VERSION: u32 = 1;

/// Serialize a memory together with the session config.
pub fn write_snapshot(memory: &Memory, config: &Config) -> Vec<u8> {
    let dim = config.dimension;
    let mut out = Vec::with_capacity(106 + memory.len() * (32 + 8 * dim));
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(dim as u32).to_le_bytes());
    out.extend_from_slice(&config.digest().to_le_bytes());
    out.extend_from_slice(&(memory.len() as u64).to_le_bytes());
    out.extend_from_slice(&memory.next_identity().0.to_le_bytes());
    out.extend_from_slice(&memory.frame_counter().to_le_bytes());
    out.extend_from_slice(&config.behaviour_bytes());
    out.extend_from_slice(&config.seed.to_le_bytes());
    for el in memory.elements() {
        out.extend_from_slice(&el.identity.0.to_le_bytes());
        out.extend_from_slice(&el.eligibility.to_bits().to_le_bytes());
        out.extend_from_slice(&el.inserted_at.to_le_bytes());
        out.extend_from_slice(&el.last_matched_at.to_le_bytes());
        for v in el.descriptor.values() {
            out.extend_from_slice(&v.to_bits().to_le_bytes());
        }
    }
    out
}

/// Deserialize a snapshot, validating structure and every element
/// invariant. Returns the memory and the embedded config.
pub fn read_snapshot(bytes: &[u8]) -> Result<(Memory, Config)> {
    let mut r = Reader::new(bytes);
    if r.take(8)? != MAGIC {
        return Err(Error::SnapshotMagic);
    }
    let version = r.u32()?;
    if version != FORMAT_VERSION {
        return Err(Error::SnapshotVersion(version));
    }
    let dimension = r.u32()? as usize;
    let digest = r.u64()?;
    let count = r.u64()?;
    let next_identity = r.u64()?;
    let frame_counter = r.u64()?;

    let config = read_config(&mut r)?;
    config
        .validate()
        .map_err(|e| Error::SnapshotCorrupt(format!("embedded config invalid: {e}")))?;
    if config.dimension != dimension {
        return Err(Error::SnapshotCorrupt(
            "header dimension disagrees with config record".into(),
        ));
    }
    if config.digest() != digest {
        return Err(Error::SnapshotCorrupt(
            "config digest disagrees with config record".into(),
        ));
    }

    let mut elements = Vec::with_capacity(count.min(1 << 20) as usize);
    for _ in 0..count {
        let identity = r.u64()?;
        let eligibility = r.f64()?;
        let inserted_at = r.u64()?;
        let last_matched_at = r.u64()?;
        let mut values = Vec::with_capacity(dimension);
        for _ in 0..dimension {
            values.push(r.f64()?);
        }
        if !(eligibility > 0.0 && eligibility <= 1.0) {
            return Err(Error::SnapshotCorrupt(format!(
                "eligibility {eligibility} outside (0, 1]"
            )));
        }
        if last_matched_at < inserted_at || last_matched_at > frame_counter {
            return Err(Error::SnapshotCorrupt(
                "element timestamps violate orderings".into(),
            ));
        }
        if identity >= next_identity {
            return Err(Error::SnapshotCorrupt(
                "identity not below next_identity".into(),
            ));
        }
        let descriptor = Descriptor::new(values)
            .map_err(|e| Error::SnapshotCorrupt(format!("bad descriptor: {e}")))?;
        elements.push(MemoryElement {
            descriptor,
            identity: IdentityId(identity),
            eligibility,
            inserted_at,
            last_matched_at,
        });
    }
    if !r.is_empty() {
        return Err(Error::SnapshotCorrupt("trailing bytes".into()));
    }

    let mut memory = Memory::new(&config)?;
    memory.set_frame_counter(frame_counter);
    for el in elements {
        memory.insert(el);
    }
    // insert() only ever raises next_identity; restore the recorded value.
    memory.next_identity = IdentityId(next_identity);
    Ok((memory, config))
}

fn read_config(r: &mut Reader<'_>) -> Result<Config> {
    let rho_bar = r.f64()?;
    let e_bar = r.f64()?;
    let alpha = r.f64()?;
    let max_stale = r.u64()?;
    let dimension = r.u64()? as usize;
    let gate_flag = r.u8()?;
    let gate_value = r.f64()?;
    let abs_gate = match gate_flag {
        0 => None,
        1 => Some(gate_value),
        other => return Err(Error::SnapshotCorrupt(format!("bad abs_gate flag {other}"))),
    };
    let normalize = match r.u8()? {
        0 => false,
        1 => true,
        other => {
            return Err(Error::SnapshotCorrupt(format!(
                "bad normalize flag {other}"
            )))
        }
    };
    let seed = r.u64()?;
    Ok(Config {
        rho_bar,
        e_bar,
        alpha,
        max_stale,
        dimension,
        abs_gate,
        normalize,
        seed,
    })
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn new(bytes: &'a [u8]) -> Self {
        Reader { bytes, pos: 0 }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.bytes.len() {
            return Err(Error::SnapshotCorrupt("unexpected end of data".into()));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_bits(self.u64()?))
    }

    fn is_empty(&self) -> bool {
        self.pos == self.bytes.len()
    }
}
