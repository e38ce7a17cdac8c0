//! Conversation threads and the project event log.
//!
//! Every document or part can have one thread. Manual requests open (or
//! extend) the subject's thread and are logged as polls. The event log is
//! the project's change feed: append-only, gap-free, and each event carries
//! the set of organizations allowed to see it.

use std::collections::{BTreeMap, BTreeSet};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::access::{AccessGrant, GrantSet, Level};
use crate::flow::{Alert, PollLog, PollMode, PollRecord, PollTarget, Visibility};
use crate::ids::{OrgId, Sequence, ThreadId};
use crate::sfi::{PartIdentity, SfiPath, SfiTree};
use crate::store::DocumentId;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PartnerError {
    #[error("no registered part matches {0}")]
    UnknownSubject(Box<PartIdentity>),
    #[error("unknown thread {0}")]
    UnknownThread(ThreadId),
    #[error("{org} is not a participant of thread {thread}")]
    NotParticipant { org: OrgId, thread: ThreadId },
    #[error("message body must not be empty")]
    EmptyBody,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Subject {
    Part { part: PartIdentity },
    Document { doc: DocumentId },
}

impl Subject {
    pub fn part(&self) -> &PartIdentity {
        match self {
            Subject::Part { part } => part,
            Subject::Document { doc } => &doc.part,
        }
    }

    fn poll_target(&self) -> PollTarget {
        match self {
            Subject::Part { part } => PollTarget::Part { part: part.clone() },
            Subject::Document { doc } => PollTarget::Document { doc: doc.clone() },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Message {
    pub author: OrgId,
    pub body: String,
    pub sent_at: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Thread {
    pub id: ThreadId,
    pub subject: Subject,
    pub participants: BTreeSet<OrgId>,
    pub messages: Vec<Message>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManualRequest {
    pub thread: Thread,
    pub poll: PollRecord,
    /// False when the request was appended to an existing thread.
    pub opened: bool,
}

// ---------------------------------------------------------------------------
// Events

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum EventKind {
    RequestIssued,
    MessagePosted,
    DocumentUploaded,
    AlertRaised,
    GrantChanged,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum EventPayload {
    RequestIssued {
        poll: PollRecord,
        addressee: Option<OrgId>,
        thread: Option<ThreadId>,
    },
    MessagePosted {
        thread: ThreadId,
        author: OrgId,
        index: usize,
    },
    DocumentUploaded {
        doc: DocumentId,
        version: u32,
        author: OrgId,
    },
    AlertRaised {
        alert: Alert,
    },
    GrantChanged {
        grant: AccessGrant,
        added: bool,
    },
}

/// The place in the tree an event talks about, if any.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Location<'a> {
    Part(&'a PartIdentity),
    Path(SfiPath),
}

impl EventPayload {
    pub fn kind(&self) -> EventKind {
        match self {
            EventPayload::RequestIssued { .. } => EventKind::RequestIssued,
            EventPayload::MessagePosted { .. } => EventKind::MessagePosted,
            EventPayload::DocumentUploaded { .. } => EventKind::DocumentUploaded,
            EventPayload::AlertRaised { .. } => EventKind::AlertRaised,
            EventPayload::GrantChanged { .. } => EventKind::GrantChanged,
        }
    }

    /// Thread messages are addressed to the thread's participants and carry
    /// no document content, so they are not tied to a tree location.
    pub fn location(&self) -> Option<Location<'_>> {
        match self {
            EventPayload::RequestIssued { poll, .. } => Some(Location::Part(poll.target.part())),
            EventPayload::MessagePosted { .. } => None,
            EventPayload::DocumentUploaded { doc, .. } => Some(Location::Part(&doc.part)),
            EventPayload::AlertRaised { alert } => alert.subject.part().map(Location::Part),
            EventPayload::GrantChanged { grant, .. } => Some(Location::Path(grant.scope)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Event {
    pub id: u64,
    pub kind: EventKind,
    pub payload: EventPayload,
    pub occurred_at: DateTime<Utc>,
    pub audience: BTreeSet<OrgId>,
}

/// Whether `org` may learn about `location`.
pub fn may_see(grants: &GrantSet, org: &OrgId, location: &Location<'_>) -> bool {
    match location {
        Location::Part(part) => grants.check_part(org, part, Level::Read),
        Location::Path(path) => grants.check(org, path, Level::Read),
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventLog {
    events: Vec<Event>,
    ids: Sequence,
}

impl EventLog {
    /// Appends an event visible to those `candidates` who may see its
    /// location. Ids start at 1 and have no gaps.
    pub fn emit(
        &mut self,
        payload: EventPayload,
        at: DateTime<Utc>,
        candidates: impl IntoIterator<Item = OrgId>,
        grants: &GrantSet,
    ) -> &Event {
        let location = payload.location();
        let audience = candidates
            .into_iter()
            .filter(|org| location.as_ref().is_none_or(|l| may_see(grants, org, l)))
            .collect();
        let event = Event {
            id: self.ids.next_value(),
            kind: payload.kind(),
            payload,
            occurred_at: at,
            audience,
        };
        self.events.push(event);
        self.events.last().expect("just pushed")
    }

    /// Events `org` may see with id greater than `since`, in order.
    pub fn events_for(&self, org: &OrgId, since: u64) -> Vec<&Event> {
        let start = self.events.partition_point(|e| e.id <= since);
        self.events[start..]
            .iter()
            .filter(|e| e.audience.contains(org))
            .collect()
    }

    pub fn all(&self) -> &[Event] {
        &self.events
    }

    pub fn last_id(&self) -> u64 {
        self.ids.current()
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }
}

// ---------------------------------------------------------------------------
// Threads

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partner {
    threads: BTreeMap<ThreadId, Thread>,
    #[serde(with = "crate::serde_util::pairs")]
    by_subject: BTreeMap<Subject, ThreadId>,
    ids: Sequence,
}

fn check_body(body: &str) -> Result<(), PartnerError> {
    if body.trim().is_empty() {
        Err(PartnerError::EmptyBody)
    } else {
        Ok(())
    }
}

impl Partner {
    pub fn new() -> Self {
        Self::default()
    }

    /// A yard (or anyone) asks the subject part's supplier directly. The
    /// subject's part must be registered in `tree`; a document need not exist
    /// yet, since asking for a missing one is the usual reason to ask.
    #[allow(clippy::too_many_arguments)]
    pub fn manual_request(
        &mut self,
        subject: Subject,
        requester: &OrgId,
        body: &str,
        at: DateTime<Utc>,
        tree: &SfiTree,
        polls: &mut PollLog,
        events: &mut EventLog,
        grants: &GrantSet,
    ) -> Result<ManualRequest, PartnerError> {
        check_body(body)?;
        let part = subject.part();
        if !tree.contains(part) {
            return Err(PartnerError::UnknownSubject(Box::new(part.clone())));
        }
        let supplier = part.supplier_id.clone();
        let (id, opened) = match self.by_subject.get(&subject) {
            Some(id) => (id.clone(), false),
            None => {
                let id = loop {
                    let c = ThreadId::new(self.ids.next_id("thread"));
                    if !self.threads.contains_key(&c) {
                        break c;
                    }
                };
                self.threads.insert(
                    id.clone(),
                    Thread {
                        id: id.clone(),
                        subject: subject.clone(),
                        participants: BTreeSet::new(),
                        messages: Vec::new(),
                    },
                );
                self.by_subject.insert(subject.clone(), id.clone());
                (id, true)
            }
        };
        let thread = self.threads.get_mut(&id).expect("just ensured");
        thread.participants.insert(supplier.clone());
        thread.participants.insert(requester.clone());
        thread.messages.push(Message {
            author: requester.clone(),
            body: body.to_owned(),
            sent_at: at,
        });
        let poll = polls.record(
            subject.poll_target(),
            PollMode::Manual,
            Visibility::Explicit,
            requester,
            at,
        );
        events.emit(
            EventPayload::RequestIssued {
                poll: poll.clone(),
                addressee: Some(supplier.clone()),
                thread: Some(id),
            },
            at,
            [requester.clone(), supplier],
            grants,
        );
        Ok(ManualRequest {
            thread: thread.clone(),
            poll,
            opened,
        })
    }

    pub fn post_message(
        &mut self,
        thread: &ThreadId,
        author: &OrgId,
        body: &str,
        at: DateTime<Utc>,
        events: &mut EventLog,
        grants: &GrantSet,
    ) -> Result<&Thread, PartnerError> {
        let t = self
            .threads
            .get_mut(thread)
            .ok_or_else(|| PartnerError::UnknownThread(thread.clone()))?;
        if !t.participants.contains(author) {
            return Err(PartnerError::NotParticipant {
                org: author.clone(),
                thread: thread.clone(),
            });
        }
        check_body(body)?;
        t.messages.push(Message {
            author: author.clone(),
            body: body.to_owned(),
            sent_at: at,
        });
        events.emit(
            EventPayload::MessagePosted {
                thread: thread.clone(),
                author: author.clone(),
                index: t.messages.len() - 1,
            },
            at,
            t.participants.iter().cloned(),
            grants,
        );
        Ok(t)
    }

    pub fn thread(&self, id: &ThreadId) -> Result<&Thread, PartnerError> {
        self.threads
            .get(id)
            .ok_or_else(|| PartnerError::UnknownThread(id.clone()))
    }

    pub fn thread_for(&self, subject: &Subject) -> Option<&Thread> {
        self.by_subject.get(subject).and_then(|id| self.threads.get(id))
    }

    pub fn threads(&self) -> impl Iterator<Item = &Thread> {
        self.threads.values()
    }
}
