use std::fs::{self, File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::error::HubError;
use super::state::{JournalRecord, ProjectState};

/// Append-only JSON-lines journal. Each record is written with a single
/// `write` followed by a data sync, so a crash can only leave a partial last
/// line. That tail is dropped on open; a bad complete line is corruption.
#[derive(Debug)]
pub struct Journal {
    path: PathBuf,
    file: File,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Recovered {
    pub records: Vec<JournalRecord>,
    /// Bytes of an incomplete trailing line that were discarded.
    pub torn_bytes: usize,
}

impl Journal {
    pub fn open(path: impl AsRef<Path>) -> Result<(Self, Recovered), HubError> {
        let path = path.as_ref().to_path_buf();
        let raw = match fs::read(&path) {
            Ok(raw) => raw,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Vec::new(),
            Err(e) => return Err(e.into()),
        };
        let complete = raw.iter().rposition(|b| *b == b'\n').map_or(0, |i| i + 1);
        let torn_bytes = raw.len() - complete;
        let mut records = Vec::new();
        for (n, line) in raw[..complete].split(|b| *b == b'\n').enumerate() {
            if line.is_empty() {
                continue;
            }
            let record: JournalRecord = serde_json::from_slice(line).map_err(|e| {
                HubError::Journal(format!("{} line {}: {e}", path.display(), n + 1))
            })?;
            let expected = records.len() as u64 + 1;
            if record.seq != expected {
                return Err(HubError::Journal(format!(
                    "{} line {}: record {} where {expected} was expected",
                    path.display(),
                    n + 1,
                    record.seq
                )));
            }
            records.push(record);
        }
        if torn_bytes > 0 {
            let f = OpenOptions::new().write(true).open(&path)?;
            f.set_len(complete as u64)?;
            f.sync_all()?;
        }
        let file = OpenOptions::new().create(true).append(true).open(&path)?;
        Ok((Self { path, file }, Recovered { records, torn_bytes }))
    }

    pub fn append(&mut self, record: &JournalRecord) -> Result<(), HubError> {
        let mut line = serde_json::to_vec(record).expect("records serialize");
        line.push(b'\n');
        self.file.write_all(&line)?;
        self.file.sync_data()?;
        Ok(())
    }

    pub fn path(&self) -> &Path {
        &self.path
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub(crate) struct Snapshot {
    pub seq: u64,
    pub state: ProjectState,
}

pub(crate) fn write_snapshot(path: &Path, state: &ProjectState) -> Result<(), HubError> {
    let tmp = path.with_extension("json.tmp");
    let bytes = serde_json::to_vec(&Snapshot {
        seq: state.seq,
        state: state.clone(),
    })
    .expect("state serializes");
    fs::write(&tmp, bytes)?;
    File::open(&tmp)?.sync_all()?;
    fs::rename(&tmp, path)?;
    Ok(())
}

pub(crate) fn read_snapshot(path: &Path) -> Result<Option<Snapshot>, HubError> {
    match fs::read(path) {
        Ok(bytes) => serde_json::from_slice(&bytes)
            .map(Some)
            .map_err(|e| HubError::Journal(format!("{}: {e}", path.display()))),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
        Err(e) => Err(e.into()),
    }
}
