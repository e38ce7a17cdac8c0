//! The project hub: an event-sourced state machine over all modules.
//!
//! Mutations arrive as [`Command`]s from an acting organization. Each one is
//! applied to a copy of the state; only if it succeeds is it appended to the
//! journal and the copy swapped in. The state can always be rebuilt by
//! replaying the journal, optionally starting from the latest snapshot.

mod error;
mod journal;
mod query;
pub mod scenario;
mod state;

use std::path::{Path, PathBuf};
use std::sync::Arc;

use chrono::{DateTime, NaiveDate, Utc};

pub use error::{ErrorKind, HubError};
pub use journal::{Journal, Recovered};
pub use query::{ShipSummary, ShipTypeSummary};
pub use state::{fingerprint, Clock, Command, JournalRecord, ProjectState, Reply};

use crate::flow::midnight;
use crate::ids::OrgId;
use crate::store::{BlobStore, ContentHash, DirBlobs, DocumentId, MemoryBlobs};
use crate::sync::{ChangeSet, HubPort, PushAck, ReplicaSummary, SyncError};

pub const JOURNAL_FILE: &str = "journal.jsonl";
pub const SNAPSHOT_FILE: &str = "snapshot.json";
pub const BLOB_DIR: &str = "blobs";

/// Parameters of a new project.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Genesis {
    pub project: String,
    pub owner: OrgId,
    pub clock: Clock,
    pub lead_time_days: i64,
}

impl Genesis {
    pub fn simulated(owner: impl Into<OrgId>, start: NaiveDate) -> Self {
        Self {
            project: "project".into(),
            owner: owner.into(),
            clock: Clock::Simulated { today: start },
            lead_time_days: crate::flow::DEFAULT_LEAD_TIME_DAYS,
        }
    }

    fn command(&self) -> Command {
        Command::Init {
            project: self.project.clone(),
            owner: self.owner.clone(),
            clock: self.clock,
            lead_time_days: self.lead_time_days,
        }
    }
}

pub struct Hub {
    state: Arc<ProjectState>,
    blobs: Arc<dyn BlobStore>,
    journal: Option<Journal>,
    dir: Option<PathBuf>,
    snapshot_every: u64,
    recovered: Recovered,
}

impl std::fmt::Debug for Hub {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Hub")
            .field("project", &self.state.project)
            .field("seq", &self.state.seq)
            .field("dir", &self.dir)
            .finish()
    }
}

fn now_for(clock: Clock) -> DateTime<Utc> {
    match clock {
        Clock::Simulated { today } => midnight(today),
        Clock::Real => Utc::now(),
    }
}

impl Hub {
    /// A hub without persistence, for tests, examples and scenarios.
    pub fn in_memory(genesis: Genesis) -> Self {
        let blobs: Arc<dyn BlobStore> = Arc::new(MemoryBlobs::new());
        let record = JournalRecord {
            seq: 1,
            at: now_for(genesis.clock),
            actor: genesis.owner.clone(),
            key: None,
            command: genesis.command(),
        };
        let state = ProjectState::genesis(&record).expect("init record is valid");
        Self {
            state: Arc::new(state),
            blobs,
            journal: None,
            dir: None,
            snapshot_every: 0,
            recovered: Recovered::default(),
        }
    }

    /// Opens the hub stored in `dir`, creating it from `genesis` if the
    /// directory holds no journal yet. A snapshot is written every
    /// `snapshot_every` records (0 disables snapshots).
    pub fn open(
        dir: impl AsRef<Path>,
        genesis: Option<Genesis>,
        snapshot_every: u64,
    ) -> Result<Self, HubError> {
        let dir = dir.as_ref().to_path_buf();
        std::fs::create_dir_all(&dir)?;
        let blobs: Arc<dyn BlobStore> = Arc::new(DirBlobs::open(dir.join(BLOB_DIR))?);
        let (mut journal, recovered) = Journal::open(dir.join(JOURNAL_FILE))?;
        let snapshot = journal::read_snapshot(&dir.join(SNAPSHOT_FILE))?;

        let state = if recovered.records.is_empty() {
            if snapshot.is_some() {
                return Err(HubError::Journal(
                    "snapshot present but the journal is empty".into(),
                ));
            }
            let genesis = genesis.ok_or_else(|| {
                HubError::Journal(format!("no project in {}", dir.display()))
            })?;
            let record = JournalRecord {
                seq: 1,
                at: now_for(genesis.clock),
                actor: genesis.owner.clone(),
                key: None,
                command: genesis.command(),
            };
            let state = ProjectState::genesis(&record)?;
            journal.append(&record)?;
            state
        } else {
            let mut state = match snapshot {
                Some(s) if s.seq as usize <= recovered.records.len() => s.state,
                Some(s) => {
                    return Err(HubError::Journal(format!(
                        "snapshot at record {} is ahead of the journal ({} records)",
                        s.seq,
                        recovered.records.len()
                    )))
                }
                None => ProjectState::genesis(&recovered.records[0])?,
            };
            for record in &recovered.records[state.seq as usize..] {
                let mut next = state.clone();
                next.apply(record, blobs.as_ref()).map_err(|e| {
                    HubError::Journal(format!("replaying record {}: {e}", record.seq))
                })?;
                state = next;
            }
            state
        };
        Ok(Self {
            state: Arc::new(state),
            blobs,
            journal: Some(journal),
            dir: Some(dir),
            snapshot_every,
            recovered,
        })
    }

    /// Rebuilds a state from journal records alone.
    pub fn replay(records: &[JournalRecord], blobs: &dyn BlobStore) -> Result<ProjectState, HubError> {
        let first = records
            .first()
            .ok_or_else(|| HubError::Journal("empty journal".into()))?;
        let mut state = ProjectState::genesis(first)?;
        for record in &records[1..] {
            state.apply(record, blobs)?;
        }
        Ok(state)
    }

    pub fn state(&self) -> Arc<ProjectState> {
        Arc::clone(&self.state)
    }

    pub fn blobs(&self) -> &dyn BlobStore {
        self.blobs.as_ref()
    }

    pub fn digest(&self) -> String {
        self.state.digest()
    }

    pub fn journal_len(&self) -> u64 {
        self.state.seq
    }

    pub fn recovered(&self) -> &Recovered {
        &self.recovered
    }

    pub fn now(&self) -> DateTime<Utc> {
        now_for(self.state.clock)
    }

    /// Applies and journals a command. With an idempotency key, a repeat of
    /// an accepted request returns the original reply and changes nothing.
    pub fn submit(
        &mut self,
        actor: &OrgId,
        key: Option<&str>,
        command: Command,
    ) -> Result<Reply, HubError> {
        if let Some(key) = key {
            if let Some(reply) = self.state.remembered(key, actor, &command)? {
                return Ok(reply.clone());
            }
        }
        let record = JournalRecord {
            seq: self.state.seq + 1,
            at: self.now(),
            actor: actor.clone(),
            key: key.map(str::to_owned),
            command,
        };
        let mut next = (*self.state).clone();
        let reply = next.apply(&record, self.blobs.as_ref())?;
        if let Some(journal) = &mut self.journal {
            journal.append(&record)?;
        }
        self.state = Arc::new(next);
        if self.snapshot_every > 0 && self.state.seq.is_multiple_of(self.snapshot_every) {
            self.snapshot()?;
        }
        Ok(reply)
    }

    /// Stores `bytes` and registers them as the next version of `doc`.
    pub fn push(
        &mut self,
        actor: &OrgId,
        key: Option<&str>,
        doc: &DocumentId,
        bytes: &[u8],
        format_tag: &str,
    ) -> Result<Reply, HubError> {
        if bytes.is_empty() {
            return Err(HubError::Invalid("document content is empty".into()));
        }
        let hash = self.blobs.put(bytes)?;
        self.submit(
            actor,
            key,
            Command::Upload {
                doc: doc.clone(),
                hash,
                format_tag: format_tag.to_owned(),
            },
        )
    }

    /// Blob bytes, if `actor` may read some document version that has them.
    pub fn blob(&self, actor: &OrgId, hash: &ContentHash) -> Result<Vec<u8>, HubError> {
        self.state.may_fetch(actor, hash)?;
        self.blobs
            .get(hash)?
            .ok_or_else(|| HubError::NotFound(format!("blob {hash}")))
    }

    pub fn diff(&self, actor: &OrgId, summary: &ReplicaSummary) -> ChangeSet {
        self.state.diff_for(actor, summary)
    }

    pub fn snapshot(&self) -> Result<(), HubError> {
        if let Some(dir) = &self.dir {
            journal::write_snapshot(&dir.join(SNAPSHOT_FILE), &self.state)?;
        }
        Ok(())
    }

    /// This hub as seen by `actor`, for in-process pulls and pushes.
    pub fn port(&mut self, actor: impl Into<OrgId>) -> LocalPort<'_> {
        LocalPort {
            hub: self,
            actor: actor.into(),
        }
    }
}

pub struct LocalPort<'a> {
    hub: &'a mut Hub,
    actor: OrgId,
}

impl HubPort for LocalPort<'_> {
    fn diff(&mut self, summary: &ReplicaSummary) -> Result<ChangeSet, SyncError> {
        Ok(self.hub.diff(&self.actor, summary))
    }

    fn fetch_blob(&mut self, hash: &ContentHash) -> Result<Vec<u8>, SyncError> {
        self.hub
            .blob(&self.actor, hash)
            .map_err(|e| SyncError::Remote(e.to_string()))
    }

    fn push(&mut self, doc: &DocumentId, bytes: &[u8], format_tag: &str) -> Result<PushAck, SyncError> {
        match self.hub.push(&self.actor, None, doc, bytes, format_tag) {
            Ok(Reply::Uploaded {
                doc,
                version,
                created,
            }) => Ok(PushAck {
                doc,
                version: version.version,
                content_hash: version.content_hash,
                created,
            }),
            Ok(other) => Err(SyncError::Remote(format!("unexpected reply {other:?}"))),
            Err(e) => Err(SyncError::Remote(e.to_string())),
        }
    }
}
