//! Versioned, content-addressed document storage.
//!
//! Every document belongs to a part and carries a name unique for that part.
//! Revisions are numbered 1, 2, 3, ... per document; bytes live in a
//! [`BlobStore`] under their SHA-256 digest. Superseded revisions are
//! deprecated, never deleted.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Mutex;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::access::{AccessError, GrantSet, Level};
use crate::ids::OrgId;
use crate::sfi::PartIdentity;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct DocumentId {
    pub part: PartIdentity,
    pub doc_name: String,
}

impl DocumentId {
    pub fn new(part: PartIdentity, doc_name: impl Into<String>) -> Self {
        Self {
            part,
            doc_name: doc_name.into(),
        }
    }
}

impl fmt::Display for DocumentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} / {:?}", self.part, self.doc_name)
    }
}

/// SHA-256 digest of a blob.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ContentHash([u8; 32]);

impl ContentHash {
    pub fn of(bytes: &[u8]) -> Self {
        Self(Sha256::digest(bytes).into())
    }

    pub fn as_bytes(&self) -> &[u8; 32] {
        &self.0
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }
}

impl fmt::Debug for ContentHash {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ContentHash({})", &self.to_hex()[..12])
    }
}

impl fmt::Display for ContentHash {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

impl FromStr for ContentHash {
    type Err = StoreError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut out = [0u8; 32];
        hex::decode_to_slice(s, &mut out).map_err(|_| StoreError::BadHash(s.to_owned()))?;
        Ok(Self(out))
    }
}

impl Serialize for ContentHash {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ContentHash {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        String::deserialize(deserializer)?
            .parse()
            .map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DocumentVersion {
    pub version: u32,
    pub content_hash: ContentHash,
    pub format_tag: String,
    pub author_org: OrgId,
    pub created_at: DateTime<Utc>,
    pub size: u64,
    pub deprecated: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StoreError {
    #[error(transparent)]
    Unauthorized(#[from] AccessError),
    #[error("document content is empty")]
    EmptyContent,
    #[error("document name must not be empty")]
    EmptyName,
    #[error("unknown document {0}")]
    UnknownDocument(Box<DocumentId>),
    #[error("document {0} has no version {1}")]
    UnknownVersion(Box<DocumentId>, u32),
    #[error("blob {0} is not in the blob store")]
    MissingBlob(ContentHash),
    #[error("invalid content hash {0:?}")]
    BadHash(String),
    #[error("blob store I/O: {0}")]
    Io(String),
}

/// Immutable blob storage keyed by content digest.
pub trait BlobStore: Send + Sync {
    fn put(&self, bytes: &[u8]) -> Result<ContentHash, StoreError>;
    fn get(&self, hash: &ContentHash) -> Result<Option<Vec<u8>>, StoreError>;
    fn contains(&self, hash: &ContentHash) -> bool;
}

#[derive(Debug, Default)]
pub struct MemoryBlobs {
    blobs: Mutex<BTreeMap<ContentHash, Vec<u8>>>,
}

impl MemoryBlobs {
    pub fn new() -> Self {
        Self::default()
    }

    /// Overwrites a blob with arbitrary bytes, bypassing the digest. Only
    /// useful for simulating transport or disk corruption in tests.
    pub fn corrupt(&self, hash: &ContentHash, bytes: Vec<u8>) {
        self.blobs.lock().unwrap().insert(*hash, bytes);
    }
}

impl BlobStore for MemoryBlobs {
    fn put(&self, bytes: &[u8]) -> Result<ContentHash, StoreError> {
        let hash = ContentHash::of(bytes);
        self.blobs
            .lock()
            .unwrap()
            .entry(hash)
            .or_insert_with(|| bytes.to_vec());
        Ok(hash)
    }

    fn get(&self, hash: &ContentHash) -> Result<Option<Vec<u8>>, StoreError> {
        Ok(self.blobs.lock().unwrap().get(hash).cloned())
    }

    fn contains(&self, hash: &ContentHash) -> bool {
        self.blobs.lock().unwrap().contains_key(hash)
    }
}

/// Blobs as files named by their hex digest under one directory.
#[derive(Debug, Clone)]
pub struct DirBlobs {
    dir: PathBuf,
}

impl DirBlobs {
    pub fn open(dir: impl AsRef<Path>) -> Result<Self, StoreError> {
        let dir = dir.as_ref().to_path_buf();
        fs::create_dir_all(&dir).map_err(io_err)?;
        Ok(Self { dir })
    }

    fn path_of(&self, hash: &ContentHash) -> PathBuf {
        self.dir.join(hash.to_hex())
    }
}

fn io_err(e: std::io::Error) -> StoreError {
    StoreError::Io(e.to_string())
}

impl BlobStore for DirBlobs {
    fn put(&self, bytes: &[u8]) -> Result<ContentHash, StoreError> {
        let hash = ContentHash::of(bytes);
        let target = self.path_of(&hash);
        if target.exists() {
            return Ok(hash);
        }
        let tmp = self.dir.join(format!(".{}.tmp", hash.to_hex()));
        let mut file = fs::File::create(&tmp).map_err(io_err)?;
        file.write_all(bytes).map_err(io_err)?;
        file.sync_all().map_err(io_err)?;
        fs::rename(&tmp, &target).map_err(io_err)?;
        Ok(hash)
    }

    fn get(&self, hash: &ContentHash) -> Result<Option<Vec<u8>>, StoreError> {
        match fs::read(self.path_of(hash)) {
            Ok(bytes) => Ok(Some(bytes)),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(io_err(e)),
        }
    }

    fn contains(&self, hash: &ContentHash) -> bool {
        self.path_of(hash).exists()
    }
}

/// One metadata journal record. Replaying the records of a store in order
/// reconstructs it exactly.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "snake_case")]
pub enum StoreRecord {
    Upload {
        doc: DocumentId,
        version: DocumentVersion,
    },
    Deprecate {
        doc: DocumentId,
        version: u32,
        actor: OrgId,
        at: DateTime<Utc>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UploadOutcome {
    pub version: DocumentVersion,
    /// False when the bytes matched the current latest version.
    pub created: bool,
    pub record: Option<StoreRecord>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DocStore {
    #[serde(with = "crate::serde_util::pairs")]
    docs: BTreeMap<DocumentId, Vec<DocumentVersion>>,
}

impl DocStore {
    pub fn new() -> Self {
        Self::default()
    }

    /// Stores `bytes` as the next version of `doc`. The author must be the
    /// part's supplier or hold Upload at the part's location. Bytes equal to
    /// the current latest version produce no new version.
    #[allow(clippy::too_many_arguments)]
    pub fn upload(
        &mut self,
        blobs: &dyn BlobStore,
        grants: &GrantSet,
        doc: &DocumentId,
        bytes: &[u8],
        format_tag: &str,
        author_org: &OrgId,
        at: DateTime<Utc>,
    ) -> Result<UploadOutcome, StoreError> {
        grants.require_part(author_org, &doc.part, Level::Upload)?;
        if bytes.is_empty() {
            return Err(StoreError::EmptyContent);
        }
        let hash = blobs.put(bytes)?;
        self.record_upload(doc, hash, bytes.len() as u64, format_tag, author_org, at)
    }

    /// Same as [`DocStore::upload`] for bytes already placed in `blobs`.
    #[allow(clippy::too_many_arguments)]
    pub fn upload_stored(
        &mut self,
        blobs: &dyn BlobStore,
        grants: &GrantSet,
        doc: &DocumentId,
        hash: ContentHash,
        format_tag: &str,
        author_org: &OrgId,
        at: DateTime<Utc>,
    ) -> Result<UploadOutcome, StoreError> {
        grants.require_part(author_org, &doc.part, Level::Upload)?;
        let bytes = blobs.get(&hash)?.ok_or(StoreError::MissingBlob(hash))?;
        if bytes.is_empty() {
            return Err(StoreError::EmptyContent);
        }
        self.record_upload(doc, hash, bytes.len() as u64, format_tag, author_org, at)
    }

    fn record_upload(
        &mut self,
        doc: &DocumentId,
        hash: ContentHash,
        size: u64,
        format_tag: &str,
        author_org: &OrgId,
        at: DateTime<Utc>,
    ) -> Result<UploadOutcome, StoreError> {
        if doc.doc_name.is_empty() {
            return Err(StoreError::EmptyName);
        }
        if let Ok(current) = self.latest(doc) {
            if current.content_hash == hash && !current.deprecated {
                return Ok(UploadOutcome {
                    version: current.clone(),
                    created: false,
                    record: None,
                });
            }
        }
        let versions = self.docs.entry(doc.clone()).or_default();
        let version = DocumentVersion {
            version: versions.len() as u32 + 1,
            content_hash: hash,
            format_tag: format_tag.to_owned(),
            author_org: author_org.clone(),
            created_at: at,
            size,
            deprecated: false,
        };
        versions.push(version.clone());
        Ok(UploadOutcome {
            record: Some(StoreRecord::Upload {
                doc: doc.clone(),
                version: version.clone(),
            }),
            version,
            created: true,
        })
    }

    /// The highest non-deprecated version, or the highest version (flag
    /// visible) when every version is deprecated.
    pub fn latest(&self, doc: &DocumentId) -> Result<&DocumentVersion, StoreError> {
        let versions = self
            .docs
            .get(doc)
            .filter(|v| !v.is_empty())
            .ok_or_else(|| StoreError::UnknownDocument(Box::new(doc.clone())))?;
        Ok(latest_of(versions).expect("non-empty"))
    }

    /// Marks one version deprecated. Allowed for its author and for Admins of
    /// the location. Deprecating twice is a no-op.
    pub fn deprecate(
        &mut self,
        grants: &GrantSet,
        doc: &DocumentId,
        version: u32,
        actor: &OrgId,
        at: DateTime<Utc>,
    ) -> Result<(DocumentVersion, Option<StoreRecord>), StoreError> {
        let entry = self
            .docs
            .get_mut(doc)
            .ok_or_else(|| StoreError::UnknownDocument(Box::new(doc.clone())))?
            .get_mut(version.wrapping_sub(1) as usize)
            .ok_or_else(|| StoreError::UnknownVersion(Box::new(doc.clone()), version))?;
        if entry.author_org != *actor {
            grants.require(actor, &doc.part.path(), Level::Admin)?;
        }
        if entry.deprecated {
            return Ok((entry.clone(), None));
        }
        entry.deprecated = true;
        Ok((
            entry.clone(),
            Some(StoreRecord::Deprecate {
                doc: doc.clone(),
                version,
                actor: actor.clone(),
                at,
            }),
        ))
    }

    pub fn versions(&self, doc: &DocumentId) -> &[DocumentVersion] {
        self.docs.get(doc).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn version(&self, doc: &DocumentId, version: u32) -> Option<&DocumentVersion> {
        self.versions(doc).get(version.wrapping_sub(1) as usize)
    }

    pub fn documents(&self) -> impl Iterator<Item = (&DocumentId, &[DocumentVersion])> {
        self.docs.iter().map(|(d, v)| (d, v.as_slice()))
    }

    pub fn documents_of<'a>(
        &'a self,
        part: &'a PartIdentity,
    ) -> impl Iterator<Item = (&'a DocumentId, &'a [DocumentVersion])> + 'a {
        self.docs
            .iter()
            .filter(move |(d, _)| d.part == *part)
            .map(|(d, v)| (d, v.as_slice()))
    }

    /// Whether `principal` may read at least one document version stored
    /// under `hash`.
    pub fn hash_readable_by(&self, hash: &ContentHash, principal: &OrgId, grants: &GrantSet) -> bool {
        self.docs.iter().any(|(doc, versions)| {
            versions.iter().any(|v| v.content_hash == *hash)
                && grants.check_part(principal, &doc.part, Level::Read)
        })
    }

    /// Applies a journal record without re-running authorization.
    pub fn apply_record(&mut self, record: &StoreRecord) -> Result<(), StoreError> {
        match record {
            StoreRecord::Upload { doc, version } => {
                let versions = self.docs.entry(doc.clone()).or_default();
                if version.version as usize != versions.len() + 1 {
                    return Err(StoreError::UnknownVersion(Box::new(doc.clone()), version.version));
                }
                versions.push(version.clone());
            }
            StoreRecord::Deprecate { doc, version, .. } => {
                let entry = self
                    .docs
                    .get_mut(doc)
                    .and_then(|v| v.get_mut(version.wrapping_sub(1) as usize))
                    .ok_or_else(|| StoreError::UnknownVersion(Box::new(doc.clone()), *version))?;
                entry.deprecated = true;
            }
        }
        Ok(())
    }

    pub fn replay<'a>(records: impl IntoIterator<Item = &'a StoreRecord>) -> Result<Self, StoreError> {
        let mut store = Self::new();
        for record in records {
            store.apply_record(record)?;
        }
        Ok(store)
    }
}

/// Highest non-deprecated entry, else the highest entry.
pub fn latest_of(versions: &[DocumentVersion]) -> Option<&DocumentVersion> {
    versions
        .iter()
        .filter(|v| !v.deprecated)
        .max_by_key(|v| v.version)
        .or_else(|| versions.iter().max_by_key(|v| v.version))
}
