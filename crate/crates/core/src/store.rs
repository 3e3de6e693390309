//! Append-only run persistence: one JSON record per line, a single
//! advisory-locked writer, any number of readers.

use crate::ingest::{IngestError, RunRecord, Source};
use std::fs::{File, OpenOptions};
use std::io::{Read, Seek, SeekFrom, Write};
use std::os::fd::AsRawFd;
use std::path::{Path, PathBuf};
use thiserror::Error;

/// Handle to a newline-delimited JSON log of run records. Opening performs
/// no IO; a missing file reads as an empty store.
#[derive(Debug, Clone)]
pub struct RunStore {
    path: PathBuf,
}

/// Conjunctive filters for listing; `None` matches everything.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct StoreFilter {
    pub strategy_id: Option<String>,
    pub encoder_tag: Option<String>,
    pub source: Option<Source>,
}

impl StoreFilter {
    pub fn matches(&self, record: &RunRecord) -> bool {
        self.strategy_id.as_ref().is_none_or(|s| *s == record.strategy_id)
            && self.encoder_tag.as_ref().is_none_or(|e| *e == record.encoder_tag)
            && self.source.is_none_or(|src| src == record.source)
    }
}

fn lock_exclusive(file: &File) -> std::io::Result<()> {
    // Blocking advisory lock; released when the descriptor closes.
    let rc = unsafe { libc::flock(file.as_raw_fd(), libc::LOCK_EX) };
    if rc == 0 {
        Ok(())
    } else {
        Err(std::io::Error::last_os_error())
    }
}

fn parse_log(bytes: &[u8]) -> Result<Vec<RunRecord>, StoreError> {
    let mut records = Vec::new();
    let mut offset: u64 = 0;
    for chunk in bytes.split_inclusive(|&b| b == b'\n') {
        let line_len = chunk.len() as u64;
        let complete = chunk.last() == Some(&b'\n');
        let line = if complete { &chunk[..chunk.len() - 1] } else { chunk };
        let line = if line.last() == Some(&b'\r') { &line[..line.len() - 1] } else { line };
        if !line.is_empty() {
            if !complete {
                // A torn final write: everything before it is still valid,
                // but the log needs attention.
                return Err(StoreError::Corrupt {
                    offset,
                    reason: "unterminated final line".into(),
                });
            }
            let record: RunRecord = serde_json::from_slice(line).map_err(|e| {
                StoreError::Corrupt { offset, reason: e.to_string() }
            })?;
            records.push(record);
        }
        offset += line_len;
    }
    Ok(records)
}

impl RunStore {
    pub fn open(path: impl Into<PathBuf>) -> Self {
        RunStore { path: path.into() }
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// All records in append order.
    pub fn load(&self) -> Result<Vec<RunRecord>, StoreError> {
        let bytes = match std::fs::read(&self.path) {
            Ok(b) => b,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
            Err(e) => return Err(StoreError::Io(e)),
        };
        parse_log(&bytes)
    }

    /// Appends one record. Fails without writing if the id already exists.
    pub fn put(&self, record: &RunRecord) -> Result<(), StoreError> {
        record.validate()?;
        if let Some(parent) = self.path.parent() {
            if !parent.as_os_str().is_empty() {
                std::fs::create_dir_all(parent)?;
            }
        }
        let mut file = OpenOptions::new()
            .create(true)
            .read(true)
            .append(true)
            .open(&self.path)?;
        lock_exclusive(&file)?;

        // Re-read under the lock so concurrent writers serialize their
        // uniqueness checks.
        let mut bytes = Vec::new();
        file.seek(SeekFrom::Start(0))?;
        file.read_to_end(&mut bytes)?;
        let existing = parse_log(&bytes)?;
        if existing.iter().any(|r| r.run_id == record.run_id) {
            return Err(StoreError::Conflict { run_id: record.run_id.clone() });
        }

        let mut line = serde_json::to_string(record).expect("records serialize");
        line.push('\n');
        file.seek(SeekFrom::End(0))?;
        file.write_all(line.as_bytes())?;
        file.flush()?;
        Ok(())
    }

    pub fn get(&self, run_id: &str) -> Result<Option<RunRecord>, StoreError> {
        Ok(self.load()?.into_iter().find(|r| r.run_id == run_id))
    }

    pub fn list(&self, filter: &StoreFilter) -> Result<Vec<RunRecord>, StoreError> {
        Ok(self.load()?.into_iter().filter(|r| filter.matches(r)).collect())
    }
}

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("run {run_id} already exists in the store")]
    Conflict { run_id: String },
    #[error("corrupt store line at byte offset {offset}: {reason}")]
    Corrupt { offset: u64, reason: String },
    #[error(transparent)]
    Record(#[from] IngestError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
