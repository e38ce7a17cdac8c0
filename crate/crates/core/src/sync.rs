//! Pull-based synchronization between a party's local replica and the hub.
//!
//! The replica asks; the hub answers with a [`ChangeSet`] computed from a
//! consistent snapshot of its tree, documents and grants. Only parts the
//! replica registered itself take part, and only where the pulling
//! organization may read. Locations it cannot read are left out silently.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::access::{GrantSet, Level};
use crate::ids::OrgId;
use crate::sfi::{PartIdentity, Registration, SfiError, SfiPath, SfiTree};
use crate::store::{BlobStore, ContentHash, DocStore, DocumentId, StoreError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SyncError {
    #[error("content of {doc} v{version} hashes to {actual}, expected {expected}")]
    HashMismatch {
        doc: Box<DocumentId>,
        version: u32,
        expected: ContentHash,
        actual: ContentHash,
    },
    #[error("skipped {doc} v{version}: an earlier version of the document failed")]
    Deferred { doc: Box<DocumentId>, version: u32 },
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Tree(#[from] SfiError),
    #[error("hub: {0}")]
    Remote(String),
}

/// A version held by a replica.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LocalVersion {
    pub content_hash: ContentHash,
    pub deprecated: bool,
}

/// A party's local copy: its own SFI tree and the document versions it holds.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Replica {
    pub owner: OrgId,
    pub tree: SfiTree,
    #[serde(with = "crate::serde_util::pairs")]
    docs: BTreeMap<DocumentId, BTreeMap<u32, LocalVersion>>,
}

impl Replica {
    pub fn new(owner: impl Into<OrgId>) -> Self {
        Self::with_tree(owner, SfiTree::new())
    }

    pub fn with_tree(owner: impl Into<OrgId>, tree: SfiTree) -> Self {
        Self {
            owner: owner.into(),
            tree,
            docs: BTreeMap::new(),
        }
    }

    pub fn register_part(&mut self, part: PartIdentity) -> Result<Registration, SfiError> {
        self.tree.register_part(part)
    }

    /// Records a version as held locally. The caller vouches for the bytes.
    pub fn hold(&mut self, doc: &DocumentId, version: u32, held: LocalVersion) -> Result<(), SfiError> {
        if !self.tree.contains(&doc.part) {
            self.tree.register_part(doc.part.clone())?;
        }
        self.tree.add_document(&doc.part, &doc.doc_name)?;
        self.docs.entry(doc.clone()).or_default().insert(version, held);
        Ok(())
    }

    pub fn held(&self, doc: &DocumentId) -> Option<&BTreeMap<u32, LocalVersion>> {
        self.docs.get(doc)
    }

    pub fn highest(&self, doc: &DocumentId) -> Option<u32> {
        self.docs.get(doc)?.keys().next_back().copied()
    }

    /// Same selection rule as the hub store: highest non-deprecated version,
    /// else the highest version.
    pub fn latest(&self, doc: &DocumentId) -> Option<(u32, LocalVersion)> {
        let held = self.docs.get(doc)?;
        held.iter()
            .rev()
            .find(|(_, v)| !v.deprecated)
            .or_else(|| held.iter().next_back())
            .map(|(n, v)| (*n, *v))
    }

    pub fn documents(&self) -> impl Iterator<Item = (&DocumentId, &BTreeMap<u32, LocalVersion>)> {
        self.docs.iter()
    }

    /// What the hub needs to compute a diff: registered parts and held versions.
    pub fn summary(&self) -> ReplicaSummary {
        ReplicaSummary {
            parts: self.tree.parts().cloned().collect(),
            docs: self
                .docs
                .iter()
                .map(|(doc, versions)| HeldDocument {
                    doc: doc.clone(),
                    versions: versions
                        .iter()
                        .map(|(n, v)| HeldVersion {
                            version: *n,
                            deprecated: v.deprecated,
                        })
                        .collect(),
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReplicaSummary {
    pub parts: BTreeSet<PartIdentity>,
    #[serde(default)]
    pub docs: Vec<HeldDocument>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HeldDocument {
    pub doc: DocumentId,
    pub versions: Vec<HeldVersion>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HeldVersion {
    pub version: u32,
    #[serde(default)]
    pub deprecated: bool,
}

impl ReplicaSummary {
    fn held_index(&self) -> BTreeMap<&DocumentId, BTreeMap<u32, bool>> {
        let mut index: BTreeMap<&DocumentId, BTreeMap<u32, bool>> = BTreeMap::new();
        for held in &self.docs {
            let entry = index.entry(&held.doc).or_default();
            for v in &held.versions {
                entry.insert(v.version, v.deprecated);
            }
        }
        index
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SyncAction {
    Fetch,
    DeprecateNotice,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChangeEntry {
    pub doc: DocumentId,
    pub version: u32,
    pub content_hash: ContentHash,
    pub action: SyncAction,
    /// For fetches: the hub's deprecation flag, mirrored on arrival.
    #[serde(default)]
    pub deprecated: bool,
}

impl ChangeEntry {
    fn sort_key(&self) -> (SfiPath, &str, u32, &PartIdentity) {
        (self.doc.part.path(), &self.doc.doc_name, self.version, &self.doc.part)
    }
}

/// Entries ordered by (SFI path, document name, version), at most one per
/// (document, version).
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChangeSet {
    entries: Vec<ChangeEntry>,
}

impl ChangeSet {
    pub fn new(mut entries: Vec<ChangeEntry>) -> Self {
        entries.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
        entries.dedup_by(|a, b| a.doc == b.doc && a.version == b.version);
        Self { entries }
    }

    pub fn entries(&self) -> &[ChangeEntry] {
        &self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }
}

/// A consistent read-only view of the hub state that a diff runs against.
#[derive(Debug, Clone, Copy)]
pub struct HubView<'a> {
    pub tree: &'a SfiTree,
    pub store: &'a DocStore,
    pub grants: &'a GrantSet,
}

/// Computes what `principal`'s replica lacks. For every replica part that
/// matches a hub part at a readable location: each hub version newer than the
/// highest held one is fetched, and each held version the hub has since
/// deprecated gets a notice.
pub fn diff(summary: &ReplicaSummary, hub: HubView<'_>, principal: &OrgId) -> ChangeSet {
    diff_filtered(summary, hub, principal, |_| true)
}

/// [`diff`] restricted to a single document.
pub fn diff_document(
    summary: &ReplicaSummary,
    hub: HubView<'_>,
    principal: &OrgId,
    doc: &DocumentId,
) -> ChangeSet {
    diff_filtered(summary, hub, principal, |d| d == doc)
}

pub fn diff_replica(replica: &Replica, hub: HubView<'_>, principal: &OrgId) -> ChangeSet {
    diff(&replica.summary(), hub, principal)
}

fn diff_filtered(
    summary: &ReplicaSummary,
    hub: HubView<'_>,
    principal: &OrgId,
    wanted: impl Fn(&DocumentId) -> bool,
) -> ChangeSet {
    let held = summary.held_index();
    let mut entries = Vec::new();
    for part in &summary.parts {
        if hub.tree.find_match(part).is_none() || !hub.grants.check_part(principal, part, Level::Read)
        {
            continue;
        }
        for (doc, versions) in hub.store.documents_of(part) {
            if !wanted(doc) {
                continue;
            }
            let local = held.get(doc);
            let highest = local
                .and_then(|l| l.keys().next_back().copied())
                .unwrap_or(0);
            for v in versions.iter().filter(|v| v.version > highest) {
                entries.push(ChangeEntry {
                    doc: doc.clone(),
                    version: v.version,
                    content_hash: v.content_hash,
                    action: SyncAction::Fetch,
                    deprecated: v.deprecated,
                });
            }
            for (n, local_deprecated) in local.into_iter().flatten() {
                match versions.get(n.wrapping_sub(1) as usize) {
                    Some(v) if v.deprecated && !local_deprecated => entries.push(ChangeEntry {
                        doc: doc.clone(),
                        version: *n,
                        content_hash: v.content_hash,
                        action: SyncAction::DeprecateNotice,
                        deprecated: true,
                    }),
                    _ => {}
                }
            }
        }
    }
    ChangeSet::new(entries)
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ApplyReport {
    pub applied: Vec<ChangeEntry>,
    /// Entries already reflected in the replica.
    pub unchanged: Vec<ChangeEntry>,
    pub failed: Vec<(ChangeEntry, SyncError)>,
}

impl ApplyReport {
    pub fn is_clean(&self) -> bool {
        self.failed.is_empty()
    }
}

/// Applies a change set entry by entry. A failed fetch aborts that entry and
/// the later versions of the same document (so held versions stay gap-free
/// above the pin); every other entry still applies.
pub fn apply(
    replica: &mut Replica,
    changes: &ChangeSet,
    mut fetch: impl FnMut(&ContentHash) -> Result<Vec<u8>, SyncError>,
    local_blobs: &dyn BlobStore,
) -> ApplyReport {
    let mut report = ApplyReport::default();
    let mut broken: BTreeSet<DocumentId> = BTreeSet::new();
    for entry in changes.entries() {
        if broken.contains(&entry.doc) && entry.action == SyncAction::Fetch {
            let err = SyncError::Deferred {
                doc: Box::new(entry.doc.clone()),
                version: entry.version,
            };
            report.failed.push((entry.clone(), err));
            continue;
        }
        match apply_entry(replica, entry, &mut fetch, local_blobs) {
            Ok(true) => report.applied.push(entry.clone()),
            Ok(false) => report.unchanged.push(entry.clone()),
            Err(err) => {
                broken.insert(entry.doc.clone());
                report.failed.push((entry.clone(), err));
            }
        }
    }
    report
}

fn apply_entry(
    replica: &mut Replica,
    entry: &ChangeEntry,
    fetch: &mut impl FnMut(&ContentHash) -> Result<Vec<u8>, SyncError>,
    local_blobs: &dyn BlobStore,
) -> Result<bool, SyncError> {
    match entry.action {
        SyncAction::Fetch => {
            if let Some(held) = replica.held(&entry.doc).and_then(|h| h.get(&entry.version)) {
                if held.content_hash == entry.content_hash && held.deprecated == entry.deprecated {
                    return Ok(false);
                }
            }
            if !local_blobs.contains(&entry.content_hash) {
                let bytes = fetch(&entry.content_hash)?;
                let actual = ContentHash::of(&bytes);
                if actual != entry.content_hash {
                    return Err(SyncError::HashMismatch {
                        doc: Box::new(entry.doc.clone()),
                        version: entry.version,
                        expected: entry.content_hash,
                        actual,
                    });
                }
                local_blobs.put(&bytes)?;
            }
            replica.hold(
                &entry.doc,
                entry.version,
                LocalVersion {
                    content_hash: entry.content_hash,
                    deprecated: entry.deprecated,
                },
            )?;
            Ok(true)
        }
        SyncAction::DeprecateNotice => {
            match replica
                .docs
                .get_mut(&entry.doc)
                .and_then(|h| h.get_mut(&entry.version))
            {
                Some(held) if !held.deprecated => {
                    held.deprecated = true;
                    Ok(true)
                }
                _ => Ok(false),
            }
        }
    }
}

/// Hub acknowledgement of a push.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PushAck {
    pub doc: DocumentId,
    pub version: u32,
    pub content_hash: ContentHash,
    /// False when the hub already had these bytes as the latest version.
    pub created: bool,
}

/// The hub as seen by a syncing party, bound to that party's identity.
/// Implemented in-process by the hub itself and remotely by the HTTP client.
pub trait HubPort {
    fn diff(&mut self, summary: &ReplicaSummary) -> Result<ChangeSet, SyncError>;
    fn fetch_blob(&mut self, hash: &ContentHash) -> Result<Vec<u8>, SyncError>;
    fn push(&mut self, doc: &DocumentId, bytes: &[u8], format_tag: &str) -> Result<PushAck, SyncError>;
}

/// One pull round: ask the hub for a diff and apply it.
pub fn pull(
    replica: &mut Replica,
    hub: &mut dyn HubPort,
    local_blobs: &dyn BlobStore,
) -> Result<ApplyReport, SyncError> {
    let changes = hub.diff(&replica.summary())?;
    Ok(apply(replica, &changes, |h| hub.fetch_blob(h), local_blobs))
}

/// Uploads a document through the hub and records the acknowledged version
/// as held locally.
pub fn push(
    replica: &mut Replica,
    hub: &mut dyn HubPort,
    local_blobs: &dyn BlobStore,
    doc: &DocumentId,
    bytes: &[u8],
    format_tag: &str,
) -> Result<PushAck, SyncError> {
    let ack = hub.push(doc, bytes, format_tag)?;
    local_blobs.put(bytes)?;
    if replica.highest(doc).is_none_or(|h| h <= ack.version) {
        replica.hold(
            doc,
            ack.version,
            LocalVersion {
                content_hash: ack.content_hash,
                deprecated: false,
            },
        )?;
    }
    Ok(ack)
}
