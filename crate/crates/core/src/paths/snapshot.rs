//! Binary path snapshots.
//!
//! Layout (all integers little-endian):
//! `OSCP`, u32 version, u32 depth, u32 length + UTF-8 source label,
//! u32 length + UTF-8 transform id, u128 start bit, u64 sample count,
//! then the samples as f64.

use serde_json::json;

use super::{DyadicPath, Provenance, TRANSFORM_ID};
use crate::error::{Error, Result};

pub const SNAPSHOT_MAGIC: &[u8; 4] = b"OSCP";
pub const SNAPSHOT_VERSION: u32 = 1;

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.buf.len() - self.pos < n {
            return Err(Error::Format("snapshot truncated".into()));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn u128(&mut self) -> Result<u128> {
        Ok(u128::from_le_bytes(self.take(16)?.try_into().unwrap()))
    }

    fn string(&mut self) -> Result<String> {
        let n = self.u32()? as usize;
        String::from_utf8(self.take(n)?.to_vec())
            .map_err(|_| Error::Format("snapshot string is not UTF-8".into()))
    }
}

fn start_bit(p: &Provenance) -> u128 {
    match p {
        Provenance::Source { start_bit, .. } => *start_bit,
        _ => 0,
    }
}

impl DyadicPath {
    pub fn to_snapshot_bytes(&self) -> Vec<u8> {
        let label = self.provenance.label();
        let mut out = Vec::with_capacity(64 + label.len() + 8 * self.values.len());
        out.extend_from_slice(SNAPSHOT_MAGIC);
        out.extend_from_slice(&SNAPSHOT_VERSION.to_le_bytes());
        out.extend_from_slice(&self.depth.to_le_bytes());
        for s in [label.as_str(), TRANSFORM_ID] {
            out.extend_from_slice(&(s.len() as u32).to_le_bytes());
            out.extend_from_slice(s.as_bytes());
        }
        out.extend_from_slice(&start_bit(&self.provenance).to_le_bytes());
        out.extend_from_slice(&(self.values.len() as u64).to_le_bytes());
        for v in self.values.iter() {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    /// Parses a snapshot. If the recorded source can be reopened the path
    /// regains lazy refinement.
    pub fn from_snapshot_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { buf: bytes, pos: 0 };
        if r.take(4)? != SNAPSHOT_MAGIC {
            return Err(Error::Format("not a path snapshot".into()));
        }
        let version = r.u32()?;
        if version != SNAPSHOT_VERSION {
            return Err(Error::Format(format!("unsupported snapshot version {version}")));
        }
        let depth = r.u32()?;
        let label = r.string()?;
        let transform = r.string()?;
        if transform != TRANSFORM_ID {
            return Err(Error::Format(format!("unknown transform `{transform}`")));
        }
        let start = r.u128()?;
        let count = r.u64()? as usize;
        if count > (1usize << super::MAX_DEPTH) + 1 {
            return Err(Error::Format(format!("sample count {count} too large")));
        }
        let values = r
            .take(8 * count)?
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        if r.pos != bytes.len() {
            return Err(Error::Format("trailing bytes after samples".into()));
        }
        DyadicPath::with_provenance(depth, values, Provenance::from_label(&label, start)?)
    }

    /// Provenance record written next to a snapshot.
    pub fn sidecar(&self) -> serde_json::Value {
        json!({
            "format": "oscillab-path",
            "format_version": SNAPSHOT_VERSION,
            "depth": self.depth,
            "samples": self.values.len(),
            "source": self.provenance.label(),
            "start_bit": start_bit(&self.provenance).to_string(),
            "transform": TRANSFORM_ID,
            "refinable_level": self.refinable,
            "x1": self.values[self.values.len() - 1],
        })
    }
}
