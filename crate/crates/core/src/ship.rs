//! Ship types and ships. A new ship built from a ship type starts with a deep
//! copy of the type's template tree and holds, for every template document,
//! the version that was the hub's latest at creation time.

use std::collections::BTreeMap;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ids::{OrgId, Sequence, ShipId, ShipTypeId};
use crate::sfi::{PartIdentity, SfiError, SfiTree};
use crate::store::{DocStore, DocumentId};
use crate::sync::{LocalVersion, Replica};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ShipError {
    #[error("unknown ship type {0}")]
    UnknownShipType(ShipTypeId),
    #[error("unknown ship {0}")]
    UnknownShip(ShipId),
    #[error("a ship type named {0:?} already exists")]
    DuplicateName(String),
    #[error("id {0} is already taken")]
    DuplicateId(String),
    #[error("name must not be empty")]
    EmptyName,
    #[error(transparent)]
    Tree(#[from] SfiError),
}

/// A part of a ship-type template together with the documents expected for it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TemplatePart {
    pub part: PartIdentity,
    #[serde(default)]
    pub documents: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShipType {
    pub id: ShipTypeId,
    pub name: String,
    pub template: SfiTree,
}

/// Something worth telling the yard about an inherited document.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "note", rename_all = "snake_case")]
pub enum InheritanceNote {
    /// Every version is deprecated; the highest one was pinned anyway.
    DeprecatedLatest { doc: DocumentId, version: u32 },
    /// The hub holds no version of this document yet.
    Unresolved { doc: DocumentId },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ship {
    pub id: ShipId,
    pub name: String,
    pub ship_type: Option<ShipTypeId>,
    pub created_at: DateTime<Utc>,
    /// The yard's replica for this ship; its tree is the ship's SFI tree.
    pub replica: Replica,
    pub notes: Vec<InheritanceNote>,
}

impl Ship {
    pub fn tree(&self) -> &SfiTree {
        &self.replica.tree
    }

    /// The version this ship currently references for `doc`.
    pub fn pinned(&self, doc: &DocumentId) -> Option<(u32, LocalVersion)> {
        self.replica.latest(doc)
    }

    /// Tree dump with each document annotated by its pinned version:
    /// `@3`, `@3!deprecated` or `@-` when unresolved.
    pub fn tree_lines(&self) -> String {
        self.replica.tree.to_lines_with(|part, name| {
            let doc = DocumentId::new(part.clone(), name);
            Some(match self.pinned(&doc) {
                Some((v, held)) if held.deprecated => format!("@{v}!deprecated"),
                Some((v, _)) => format!("@{v}"),
                None => "@-".to_owned(),
            })
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fleet {
    ship_types: BTreeMap<ShipTypeId, ShipType>,
    ships: BTreeMap<ShipId, Ship>,
    type_ids: Sequence,
    ship_ids: Sequence,
}

impl Fleet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds the template tree from its parts and stores the type.
    pub fn register_ship_type(
        &mut self,
        id: Option<ShipTypeId>,
        name: &str,
        parts: &[TemplatePart],
    ) -> Result<&ShipType, ShipError> {
        let mut template = SfiTree::new();
        for tp in parts {
            template.register_part(tp.part.clone())?;
            for doc in &tp.documents {
                template.add_document(&tp.part, doc)?;
            }
        }
        self.register_ship_type_tree(id, name, template)
    }

    pub fn register_ship_type_tree(
        &mut self,
        id: Option<ShipTypeId>,
        name: &str,
        template: SfiTree,
    ) -> Result<&ShipType, ShipError> {
        if name.is_empty() {
            return Err(ShipError::EmptyName);
        }
        template.validate()?;
        if self.ship_types.values().any(|t| t.name == name) {
            return Err(ShipError::DuplicateName(name.to_owned()));
        }
        let id = match id {
            Some(id) if self.ship_types.contains_key(&id) => {
                return Err(ShipError::DuplicateId(id.to_string()))
            }
            Some(id) => id,
            None => loop {
                let candidate = ShipTypeId::new(self.type_ids.next_id("type"));
                if !self.ship_types.contains_key(&candidate) {
                    break candidate;
                }
            },
        };
        let ship_type = ShipType {
            id: id.clone(),
            name: name.to_owned(),
            template,
        };
        Ok(self.ship_types.entry(id).or_insert(ship_type))
    }

    /// Creates a ship, inheriting the template of `ship_type` if given. Each
    /// template document is pinned to the store's current latest version.
    pub fn create_ship(
        &mut self,
        id: Option<ShipId>,
        name: &str,
        ship_type: Option<&ShipTypeId>,
        owner: &OrgId,
        store: &DocStore,
        at: DateTime<Utc>,
    ) -> Result<&Ship, ShipError> {
        if name.is_empty() {
            return Err(ShipError::EmptyName);
        }
        let template = match ship_type {
            Some(t) => Some(
                self.ship_types
                    .get(t)
                    .ok_or_else(|| ShipError::UnknownShipType(t.clone()))?,
            ),
            None => None,
        };
        let id = match id {
            Some(id) if self.ships.contains_key(&id) => {
                return Err(ShipError::DuplicateId(id.to_string()))
            }
            Some(id) => id,
            None => loop {
                let candidate = ShipId::new(self.ship_ids.next_id("ship"));
                if !self.ships.contains_key(&candidate) {
                    break candidate;
                }
            },
        };
        let tree = template.map(|t| t.template.clone()).unwrap_or_default();
        let mut replica = Replica::with_tree(owner.clone(), tree);
        let mut notes = Vec::new();
        let docs: Vec<DocumentId> = replica
            .tree
            .documents()
            .map(|(p, d)| DocumentId::new(p.clone(), d))
            .collect();
        for doc in docs {
            match store.latest(&doc) {
                Ok(latest) => {
                    replica.hold(
                        &doc,
                        latest.version,
                        LocalVersion {
                            content_hash: latest.content_hash,
                            deprecated: latest.deprecated,
                        },
                    )?;
                    if latest.deprecated {
                        notes.push(InheritanceNote::DeprecatedLatest {
                            doc,
                            version: latest.version,
                        });
                    }
                }
                Err(_) => notes.push(InheritanceNote::Unresolved { doc }),
            }
        }
        let ship = Ship {
            id: id.clone(),
            name: name.to_owned(),
            ship_type: ship_type.cloned(),
            created_at: at,
            replica,
            notes,
        };
        Ok(self.ships.entry(id).or_insert(ship))
    }

    pub fn ship_type(&self, id: &ShipTypeId) -> Result<&ShipType, ShipError> {
        self.ship_types
            .get(id)
            .ok_or_else(|| ShipError::UnknownShipType(id.clone()))
    }

    pub fn ship_type_by_name(&self, name: &str) -> Option<&ShipType> {
        self.ship_types.values().find(|t| t.name == name)
    }

    pub fn ship(&self, id: &ShipId) -> Result<&Ship, ShipError> {
        self.ships
            .get(id)
            .ok_or_else(|| ShipError::UnknownShip(id.clone()))
    }

    pub fn ship_mut(&mut self, id: &ShipId) -> Result<&mut Ship, ShipError> {
        self.ships
            .get_mut(id)
            .ok_or_else(|| ShipError::UnknownShip(id.clone()))
    }

    pub fn ships(&self) -> impl Iterator<Item = &Ship> {
        self.ships.values()
    }

    pub fn ship_types(&self) -> impl Iterator<Item = &ShipType> {
        self.ship_types.values()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::access::GrantSet;
    use crate::store::MemoryBlobs;

    fn org(s: &str) -> OrgId {
        OrgId::new(s)
    }

    fn at() -> DateTime<Utc> {
        DateTime::UNIX_EPOCH
    }

    fn part(code: &str, name: &str) -> PartIdentity {
        PartIdentity::parse(code, name, "SUP-A").unwrap()
    }

    fn template() -> Vec<TemplatePart> {
        vec![
            TemplatePart {
                part: part("362.003", "COOL-X"),
                documents: vec!["d1".into()],
            },
            TemplatePart {
                part: part("471.001", "PUMP"),
                documents: vec!["d2".into()],
            },
        ]
    }

    fn store_with(uploads: &[(&DocumentId, &[u8])]) -> DocStore {
        let blobs = MemoryBlobs::new();
        let grants = GrantSet::new();
        let mut store = DocStore::new();
        for (doc, bytes) in uploads {
            store
                .upload(&blobs, &grants, doc, bytes, "PDF", &org("SUP-A"), at())
                .unwrap();
        }
        store
    }

    #[test]
    fn ship_pins_latest_versions() {
        let d1 = DocumentId::new(part("362.003", "COOL-X"), "d1");
        let d2 = DocumentId::new(part("471.001", "PUMP"), "d2");
        let store = store_with(&[(&d1, b"a"), (&d1, b"b"), (&d1, b"c"), (&d2, b"x")]);
        let mut fleet = Fleet::new();
        let ty = fleet
            .register_ship_type(None, "PSV-08", &template())
            .unwrap()
            .id
            .clone();
        let ship = fleet
            .create_ship(None, "Hull 1", Some(&ty), &org("YARD"), &store, at())
            .unwrap();
        assert_eq!(ship.pinned(&d1).unwrap().0, 3);
        assert_eq!(ship.pinned(&d2).unwrap().0, 1);
        assert!(ship.notes.is_empty());
        assert!(ship.tree_lines().contains("|d1|@3\n"));
    }

    #[test]
    fn empty_template_gives_an_empty_tree() {
        let mut fleet = Fleet::new();
        let ty = fleet.register_ship_type(None, "Barge", &[]).unwrap().id.clone();
        let ship = fleet
            .create_ship(None, "B1", Some(&ty), &org("YARD"), &DocStore::new(), at())
            .unwrap();
        assert_eq!(ship.tree().part_count(), 0);
        assert_eq!(ship.tree(), &SfiTree::new());
    }

    #[test]
    fn fully_deprecated_template_doc_is_pinned_with_a_warning() {
        let d1 = DocumentId::new(part("362.003", "COOL-X"), "d1");
        let mut store = store_with(&[(&d1, b"a"), (&d1, b"b")]);
        let grants = GrantSet::new();
        store.deprecate(&grants, &d1, 1, &org("SUP-A"), at()).unwrap();
        store.deprecate(&grants, &d1, 2, &org("SUP-A"), at()).unwrap();
        let mut fleet = Fleet::new();
        let ty = fleet
            .register_ship_type(None, "PSV-08", &template())
            .unwrap()
            .id
            .clone();
        let ship = fleet
            .create_ship(None, "Hull 1", Some(&ty), &org("YARD"), &store, at())
            .unwrap();
        let (v, held) = ship.pinned(&d1).unwrap();
        assert_eq!((v, held.deprecated), (2, true));
        assert!(ship
            .notes
            .contains(&InheritanceNote::DeprecatedLatest { doc: d1, version: 2 }));
        let d2 = DocumentId::new(part("471.001", "PUMP"), "d2");
        assert!(ship.notes.contains(&InheritanceNote::Unresolved { doc: d2 }));
    }

    #[test]
    fn ship_type_registration_errors() {
        let mut fleet = Fleet::new();
        fleet.register_ship_type(None, "PSV-08", &template()).unwrap();
        assert_eq!(
            fleet.register_ship_type(None, "PSV-08", &[]).unwrap_err(),
            ShipError::DuplicateName("PSV-08".into())
        );
        let clash = vec![
            TemplatePart {
                part: part("362.003", "COOL-X"),
                documents: vec![],
            },
            TemplatePart {
                part: PartIdentity::parse("362.004", "COOL-X", "SUP-B").unwrap(),
                documents: vec![],
            },
        ];
        assert!(matches!(
            fleet.register_ship_type(None, "Other", &clash),
            Err(ShipError::Tree(SfiError::DuplicateNameInSubtree { .. }))
        ));
        assert!(matches!(
            fleet.create_ship(None, "X", Some(&ShipTypeId::new("nope")), &org("Y"), &DocStore::new(), at()),
            Err(ShipError::UnknownShipType(_))
        ));
    }

    #[test]
    fn ship_tree_is_a_deep_copy() {
        let mut fleet = Fleet::new();
        let ty = fleet
            .register_ship_type(None, "PSV-08", &template())
            .unwrap()
            .id
            .clone();
        let ship_id = fleet
            .create_ship(None, "Hull 1", Some(&ty), &org("YARD"), &DocStore::new(), at())
            .unwrap()
            .id
            .clone();
        fleet
            .ship_mut(&ship_id)
            .unwrap()
            .replica
            .register_part(part("100", "Hull"))
            .unwrap();
        assert_eq!(fleet.ship_type(&ty).unwrap().template.part_count(), 2);
        assert_eq!(fleet.ship(&ship_id).unwrap().tree().part_count(), 3);
    }
}
