//! Artifacts are written into a hidden staging directory next to the
//! output directory and moved into place only when the whole run
//! succeeds.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use sha2::{Digest, Sha256};
use tempfile::TempDir;

use crate::error::{CliError, Result};
use crate::manifest::OutputRecord;

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub struct Staging {
    dir: TempDir,
    out: PathBuf,
    records: Mutex<Vec<OutputRecord>>,
    writes: AtomicUsize,
    fault_after: Option<usize>,
}

impl Staging {
    pub fn new(out: &Path, fault_after: Option<usize>) -> Result<Self> {
        if out.exists() && !out.is_dir() {
            return Err(CliError::key("out", format!("{} is not a directory", out.display())));
        }
        let parent = match out.parent() {
            Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
            _ => PathBuf::from("."),
        };
        fs::create_dir_all(&parent)?;
        let dir = tempfile::Builder::new().prefix(".oscillab-stage-").tempdir_in(&parent)?;
        Ok(Self {
            dir,
            out: out.to_path_buf(),
            records: Mutex::new(Vec::new()),
            writes: AtomicUsize::new(0),
            fault_after,
        })
    }

    /// Writes one artifact; names must be unique within a run.
    pub fn write(&self, name: &str, bytes: &[u8]) -> Result<()> {
        let n = self.writes.fetch_add(1, Ordering::SeqCst);
        if self.fault_after.is_some_and(|k| n >= k) {
            return Err(CliError::Data(format!("injected fault writing {name}")));
        }
        let mut records = self.records.lock().expect("records lock");
        if records.iter().any(|r| r.name == name) {
            return Err(CliError::Data(format!("artifact {name} written twice")));
        }
        fs::write(self.dir.path().join(name), bytes)?;
        records.push(OutputRecord {
            name: name.to_string(),
            sha256: sha256_hex(bytes),
            bytes: bytes.len() as u64,
        });
        Ok(())
    }

    /// Records sorted by name.
    pub fn records(&self) -> Vec<OutputRecord> {
        let mut r = self.records.lock().expect("records lock").clone();
        r.sort_by(|a, b| a.name.cmp(&b.name));
        r
    }

    /// Moves every artifact, then `manifest_name`, into the output directory.
    pub fn commit(self, manifest_name: &str, manifest: &[u8]) -> Result<()> {
        fs::write(self.dir.path().join(manifest_name), manifest)?;
        if !self.out.exists() {
            let staged = self.dir.keep();
            if let Err(e) = fs::rename(&staged, &self.out) {
                let _ = fs::remove_dir_all(&staged);
                return Err(e.into());
            }
            return Ok(());
        }
        for r in self.records() {
            fs::rename(self.dir.path().join(&r.name), self.out.join(&r.name))?;
        }
        fs::rename(self.dir.path().join(manifest_name), self.out.join(manifest_name))?;
        Ok(())
    }
}
