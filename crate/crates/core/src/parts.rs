//! Part drafts and designs. A yard sketches parts into designs with whatever
//! it knows, then fills in the SFI code, name and supplier until the part is
//! identifiable, at which point it is registered in the ship's tree.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ids::{DesignId, DraftId, OrgId, Sequence, ShipId};
use crate::sfi::{PartCode, PartIdentity, Registration, SfiError, SfiTree};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PartsError {
    #[error("unknown draft {0}")]
    UnknownDraft(DraftId),
    #[error("unknown design {0}")]
    UnknownDesign(DesignId),
    #[error("draft {draft} already has {attribute} set; supersede the draft to correct it")]
    AttributeAlreadySet { draft: DraftId, attribute: Attribute },
    #[error("draft {0} was superseded by {1}")]
    Superseded(DraftId, DraftId),
    #[error("draft {draft} belongs to ship {draft_ship}, design {design} to ship {design_ship}")]
    ShipMismatch {
        draft: DraftId,
        draft_ship: ShipId,
        design: DesignId,
        design_ship: ShipId,
    },
    #[error("unknown attribute {0:?}, expected sfi, name or supplier_id")]
    UnknownAttribute(String),
    #[error("value for {0} must not be empty")]
    EmptyValue(Attribute),
    #[error("id {0} is already taken")]
    DuplicateId(String),
    #[error(transparent)]
    Code(#[from] SfiError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Attribute {
    Sfi,
    Name,
    SupplierId,
}

impl Attribute {
    pub const ALL: [Attribute; 3] = [Attribute::Sfi, Attribute::Name, Attribute::SupplierId];
}

impl fmt::Display for Attribute {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Attribute::Sfi => "sfi",
            Attribute::Name => "name",
            Attribute::SupplierId => "supplier_id",
        })
    }
}

impl FromStr for Attribute {
    type Err = PartsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "sfi" => Ok(Attribute::Sfi),
            "name" => Ok(Attribute::Name),
            "supplier_id" | "supplier" => Ok(Attribute::SupplierId),
            other => Err(PartsError::UnknownAttribute(other.to_owned())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "state", rename_all = "snake_case")]
pub enum RegistrationState {
    NotIdentifiable,
    Registered,
    /// Identifiable but the ship tree refused it; the reason is kept for
    /// the alert raised alongside.
    Failed { reason: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartDraft {
    pub id: DraftId,
    pub ship: ShipId,
    pub sfi: Option<PartCode>,
    pub name: Option<String>,
    pub supplier_id: Option<OrgId>,
    pub required_doc_kinds: BTreeSet<String>,
    pub registration: RegistrationState,
    pub superseded_by: Option<DraftId>,
    pub supersedes: Option<DraftId>,
}

impl PartDraft {
    pub fn identity(&self) -> Option<PartIdentity> {
        match (&self.sfi, &self.name, &self.supplier_id) {
            (Some(sfi), Some(name), Some(supplier)) => Some(PartIdentity {
                sfi: *sfi,
                name: name.clone(),
                supplier_id: supplier.clone(),
            }),
            _ => None,
        }
    }

    pub fn is_identifiable(&self) -> bool {
        self.missing().is_empty()
    }

    pub fn missing(&self) -> Vec<Attribute> {
        let mut missing = Vec::new();
        if self.sfi.is_none() {
            missing.push(Attribute::Sfi);
        }
        if self.name.is_none() {
            missing.push(Attribute::Name);
        }
        if self.supplier_id.is_none() {
            missing.push(Attribute::SupplierId);
        }
        missing
    }

    fn is_set(&self, attribute: Attribute) -> bool {
        match attribute {
            Attribute::Sfi => self.sfi.is_some(),
            Attribute::Name => self.name.is_some(),
            Attribute::SupplierId => self.supplier_id.is_some(),
        }
    }

    fn set(&mut self, attribute: Attribute, value: &str) -> Result<(), PartsError> {
        if value.is_empty() {
            return Err(PartsError::EmptyValue(attribute));
        }
        match attribute {
            Attribute::Sfi => self.sfi = Some(value.parse()?),
            Attribute::Name => self.name = Some(value.to_owned()),
            Attribute::SupplierId => self.supplier_id = Some(OrgId::new(value)),
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Design {
    pub id: DesignId,
    pub ship: ShipId,
    pub title: String,
    pub drafts: BTreeSet<DraftId>,
}

/// Initial attributes of a new draft, each optional.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DraftSpec {
    #[serde(default)]
    pub sfi: Option<String>,
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default)]
    pub supplier_id: Option<String>,
    /// Falls back to the project checklist when absent.
    #[serde(default)]
    pub required_doc_kinds: Option<BTreeSet<String>>,
}

/// Result of a concretize (or create/supersede) step.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Concretized {
    pub draft: PartDraft,
    /// Set when this step made the draft identifiable.
    pub registration: Option<Result<Registration, SfiError>>,
}

impl Concretized {
    /// The registration error that should be raised as an alert, if any.
    pub fn registration_error(&self) -> Option<&SfiError> {
        self.registration.as_ref().and_then(|r| r.as_ref().err())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum PartStatus {
    Identifiable,
    Incomplete { missing: Vec<Attribute> },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartsListEntry {
    pub draft: PartDraft,
    #[serde(flatten)]
    pub status: PartStatus,
}

pub fn default_doc_kinds() -> BTreeSet<String> {
    ["user manual", "test certificate"]
        .into_iter()
        .map(String::from)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartsBook {
    drafts: BTreeMap<DraftId, PartDraft>,
    designs: BTreeMap<DesignId, Design>,
    default_doc_kinds: BTreeSet<String>,
    draft_ids: Sequence,
    design_ids: Sequence,
}

impl Default for PartsBook {
    fn default() -> Self {
        Self::with_checklist(default_doc_kinds())
    }
}

impl PartsBook {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_checklist(default_doc_kinds: BTreeSet<String>) -> Self {
        Self {
            drafts: BTreeMap::new(),
            designs: BTreeMap::new(),
            default_doc_kinds,
            draft_ids: Sequence::default(),
            design_ids: Sequence::default(),
        }
    }

    pub fn checklist(&self) -> &BTreeSet<String> {
        &self.default_doc_kinds
    }

    pub fn create_design(
        &mut self,
        id: Option<DesignId>,
        ship: &ShipId,
        title: &str,
    ) -> Result<&Design, PartsError> {
        let id = match id {
            Some(id) if self.designs.contains_key(&id) => {
                return Err(PartsError::DuplicateId(id.to_string()))
            }
            Some(id) => id,
            None => loop {
                let c = DesignId::new(self.design_ids.next_id("design"));
                if !self.designs.contains_key(&c) {
                    break c;
                }
            },
        };
        let design = Design {
            id: id.clone(),
            ship: ship.clone(),
            title: title.to_owned(),
            drafts: BTreeSet::new(),
        };
        Ok(self.designs.entry(id).or_insert(design))
    }

    /// Creates a draft for `ship`. If the initial attributes already make it
    /// identifiable it is registered in `ship_tree` straight away.
    pub fn create_draft(
        &mut self,
        id: Option<DraftId>,
        ship: &ShipId,
        spec: &DraftSpec,
        ship_tree: &mut SfiTree,
    ) -> Result<Concretized, PartsError> {
        let id = match id {
            Some(id) if self.drafts.contains_key(&id) => {
                return Err(PartsError::DuplicateId(id.to_string()))
            }
            Some(id) => id,
            None => loop {
                let c = DraftId::new(self.draft_ids.next_id("draft"));
                if !self.drafts.contains_key(&c) {
                    break c;
                }
            },
        };
        let mut draft = PartDraft {
            id: id.clone(),
            ship: ship.clone(),
            sfi: None,
            name: None,
            supplier_id: None,
            required_doc_kinds: spec
                .required_doc_kinds
                .clone()
                .unwrap_or_else(|| self.default_doc_kinds.clone()),
            registration: RegistrationState::NotIdentifiable,
            superseded_by: None,
            supersedes: None,
        };
        for (attribute, value) in [
            (Attribute::Sfi, &spec.sfi),
            (Attribute::Name, &spec.name),
            (Attribute::SupplierId, &spec.supplier_id),
        ] {
            if let Some(value) = value {
                draft.set(attribute, value)?;
            }
        }
        let registration = Self::try_register(&mut draft, ship_tree);
        self.drafts.insert(id, draft.clone());
        Ok(Concretized { draft, registration })
    }

    pub fn attach(&mut self, design: &DesignId, draft: &DraftId) -> Result<(), PartsError> {
        let d = self.draft(draft)?;
        if let Some(next) = &d.superseded_by {
            return Err(PartsError::Superseded(draft.clone(), next.clone()));
        }
        let draft_ship = d.ship.clone();
        let target = self
            .designs
            .get_mut(design)
            .ok_or_else(|| PartsError::UnknownDesign(design.clone()))?;
        if target.ship != draft_ship {
            return Err(PartsError::ShipMismatch {
                draft: draft.clone(),
                draft_ship,
                design: design.clone(),
                design_ship: target.ship.clone(),
            });
        }
        target.drafts.insert(draft.clone());
        Ok(())
    }

    /// Sets one attribute. Attributes are write-once. When this makes the
    /// draft identifiable it is registered in `ship_tree`; a refused
    /// registration leaves the draft identifiable but flagged.
    pub fn concretize(
        &mut self,
        draft_id: &DraftId,
        attribute: Attribute,
        value: &str,
        ship_tree: &mut SfiTree,
    ) -> Result<Concretized, PartsError> {
        let draft = self
            .drafts
            .get_mut(draft_id)
            .ok_or_else(|| PartsError::UnknownDraft(draft_id.clone()))?;
        if let Some(next) = &draft.superseded_by {
            return Err(PartsError::Superseded(draft_id.clone(), next.clone()));
        }
        if draft.is_set(attribute) {
            return Err(PartsError::AttributeAlreadySet {
                draft: draft_id.clone(),
                attribute,
            });
        }
        let mut updated = draft.clone();
        updated.set(attribute, value)?;
        let registration = Self::try_register(&mut updated, ship_tree);
        *draft = updated.clone();
        Ok(Concretized {
            draft: updated,
            registration,
        })
    }

    /// Replaces a draft by a corrected copy. The new draft takes over the
    /// old one's design attachments.
    pub fn supersede(
        &mut self,
        draft_id: &DraftId,
        new_id: Option<DraftId>,
        corrections: &[(Attribute, String)],
        ship_tree: &mut SfiTree,
    ) -> Result<Concretized, PartsError> {
        let old = self.draft(draft_id)?.clone();
        if let Some(next) = &old.superseded_by {
            return Err(PartsError::Superseded(draft_id.clone(), next.clone()));
        }
        let mut spec = DraftSpec {
            sfi: old.sfi.map(|c| c.to_string()),
            name: old.name.clone(),
            supplier_id: old.supplier_id.as_ref().map(|s| s.to_string()),
            required_doc_kinds: Some(old.required_doc_kinds.clone()),
        };
        for (attribute, value) in corrections {
            let slot = match attribute {
                Attribute::Sfi => &mut spec.sfi,
                Attribute::Name => &mut spec.name,
                Attribute::SupplierId => &mut spec.supplier_id,
            };
            *slot = Some(value.clone());
        }
        let mut created = self.create_draft(new_id, &old.ship, &spec, ship_tree)?;
        let new_id = created.draft.id.clone();
        {
            let fresh = self.drafts.get_mut(&new_id).expect("just created");
            fresh.supersedes = Some(draft_id.clone());
            created.draft = fresh.clone();
        }
        self.drafts
            .get_mut(draft_id)
            .expect("checked above")
            .superseded_by = Some(new_id.clone());
        for design in self.designs.values_mut() {
            if design.drafts.remove(draft_id) {
                design.drafts.insert(new_id.clone());
            }
        }
        Ok(created)
    }

    fn try_register(
        draft: &mut PartDraft,
        ship_tree: &mut SfiTree,
    ) -> Option<Result<Registration, SfiError>> {
        if draft.registration != RegistrationState::NotIdentifiable {
            return None;
        }
        let identity = draft.identity()?;
        let result = ship_tree.register_part(identity);
        draft.registration = match &result {
            Ok(_) => RegistrationState::Registered,
            Err(e) => RegistrationState::Failed {
                reason: e.to_string(),
            },
        };
        Some(result)
    }

    /// Marks a registered draft as refused after the fact, for example when a
    /// wider tree than the ship's rejects it.
    pub fn flag_registration(&mut self, id: &DraftId, reason: String) -> Result<&PartDraft, PartsError> {
        let draft = self
            .drafts
            .get_mut(id)
            .ok_or_else(|| PartsError::UnknownDraft(id.clone()))?;
        draft.registration = RegistrationState::Failed { reason };
        Ok(draft)
    }

    pub fn draft(&self, id: &DraftId) -> Result<&PartDraft, PartsError> {
        self.drafts
            .get(id)
            .ok_or_else(|| PartsError::UnknownDraft(id.clone()))
    }

    pub fn design(&self, id: &DesignId) -> Result<&Design, PartsError> {
        self.designs
            .get(id)
            .ok_or_else(|| PartsError::UnknownDesign(id.clone()))
    }

    pub fn drafts(&self) -> impl Iterator<Item = &PartDraft> {
        self.drafts.values()
    }

    pub fn designs(&self) -> impl Iterator<Item = &Design> {
        self.designs.values()
    }

    /// Every draft attached to a design of `ship`, once each, ordered by SFI
    /// code, then name, then draft id.
    pub fn parts_list(&self, ship: &ShipId) -> Vec<PartsListEntry> {
        let reachable: BTreeSet<&DraftId> = self
            .designs
            .values()
            .filter(|d| d.ship == *ship)
            .flat_map(|d| d.drafts.iter())
            .collect();
        let mut entries: Vec<PartsListEntry> = reachable
            .into_iter()
            .filter_map(|id| self.drafts.get(id))
            .map(|draft| PartsListEntry {
                status: if draft.is_identifiable() {
                    PartStatus::Identifiable
                } else {
                    PartStatus::Incomplete {
                        missing: draft.missing(),
                    }
                },
                draft: draft.clone(),
            })
            .collect();
        entries.sort_by(|a, b| {
            (&a.draft.sfi, &a.draft.name, &a.draft.id).cmp(&(&b.draft.sfi, &b.draft.name, &b.draft.id))
        });
        entries
    }
}

/// CSV export for yard planners: `sfi,name,supplier,status,missing`, with
/// missing attributes joined by `;`.
pub fn parts_list_csv(entries: &[PartsListEntry]) -> String {
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer
        .write_record(["sfi", "name", "supplier", "status", "missing"])
        .expect("in-memory write");
    for entry in entries {
        let d = &entry.draft;
        let (status, missing) = match &entry.status {
            PartStatus::Identifiable => ("identifiable", String::new()),
            PartStatus::Incomplete { missing } => (
                "incomplete",
                missing
                    .iter()
                    .map(|a| a.to_string())
                    .collect::<Vec<_>>()
                    .join(";"),
            ),
        };
        writer
            .write_record([
                d.sfi.map(|c| c.to_string()).unwrap_or_default(),
                d.name.clone().unwrap_or_default(),
                d.supplier_id.as_ref().map(|s| s.to_string()).unwrap_or_default(),
                status.to_owned(),
                missing,
            ])
            .expect("in-memory write");
    }
    String::from_utf8(writer.into_inner().expect("in-memory flush")).expect("utf-8 fields")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ship() -> ShipId {
        ShipId::new("ship-1")
    }

    fn spec(sfi: Option<&str>, name: Option<&str>, supplier: Option<&str>) -> DraftSpec {
        DraftSpec {
            sfi: sfi.map(Into::into),
            name: name.map(Into::into),
            supplier_id: supplier.map(Into::into),
            required_doc_kinds: None,
        }
    }

    #[test]
    fn concretizing_the_last_attribute_registers_the_part() {
        let mut book = PartsBook::new();
        let mut tree = SfiTree::new();
        let d = book
            .create_draft(None, &ship(), &spec(None, Some("COOL-X"), None), &mut tree)
            .unwrap()
            .draft
            .id;
        let step = book
            .concretize(&d, Attribute::Sfi, "362.003", &mut tree)
            .unwrap();
        assert!(!step.draft.is_identifiable());
        assert_eq!(step.registration, None);
        let step = book
            .concretize(&d, Attribute::SupplierId, "SUP-A", &mut tree)
            .unwrap();
        assert!(step.draft.is_identifiable());
        assert_eq!(step.registration, Some(Ok(Registration::Added)));
        assert_eq!(step.draft.registration, RegistrationState::Registered);
        assert!(tree.contains(&step.draft.identity().unwrap()));
    }

    #[test]
    fn two_attributes_are_not_enough() {
        let mut book = PartsBook::new();
        let mut tree = SfiTree::new();
        let out = book
            .create_draft(None, &ship(), &spec(Some("362.003"), Some("COOL-X"), None), &mut tree)
            .unwrap();
        assert!(!out.draft.is_identifiable());
        assert_eq!(out.draft.missing(), [Attribute::SupplierId]);
        assert_eq!(tree.part_count(), 0);
    }

    #[test]
    fn collision_flags_the_draft() {
        let mut book = PartsBook::new();
        let mut tree = SfiTree::new();
        book.create_draft(None, &ship(), &spec(Some("362.003"), Some("COOL-X"), Some("SUP-A")), &mut tree)
            .unwrap();
        let d = book
            .create_draft(None, &ship(), &spec(Some("362.004"), Some("COOL-X"), None), &mut tree)
            .unwrap()
            .draft
            .id;
        let step = book
            .concretize(&d, Attribute::SupplierId, "SUP-B", &mut tree)
            .unwrap();
        assert!(step.draft.is_identifiable());
        assert!(matches!(
            step.registration_error(),
            Some(SfiError::DuplicateNameInSubtree { .. })
        ));
        assert!(matches!(step.draft.registration, RegistrationState::Failed { .. }));
    }

    #[test]
    fn attributes_are_write_once() {
        let mut book = PartsBook::new();
        let mut tree = SfiTree::new();
        let d = book
            .create_draft(None, &ship(), &spec(Some("362.003"), None, None), &mut tree)
            .unwrap()
            .draft
            .id;
        assert!(matches!(
            book.concretize(&d, Attribute::Sfi, "362.004", &mut tree),
            Err(PartsError::AttributeAlreadySet { .. })
        ));
        assert!(matches!(
            book.concretize(&d, Attribute::Name, "", &mut tree),
            Err(PartsError::EmptyValue(Attribute::Name))
        ));
        assert!(matches!(
            book.concretize(&d, Attribute::Name, "x", &mut SfiTree::new()).map(|_| ()),
            Ok(())
        ));
    }

    #[test]
    fn supersede_moves_design_attachments() {
        let mut book = PartsBook::new();
        let mut tree = SfiTree::new();
        let design = book.create_design(None, &ship(), "Cargo cooling").unwrap().id.clone();
        let old = book
            .create_draft(None, &ship(), &spec(Some("362.003"), Some("COOL-X"), None), &mut tree)
            .unwrap()
            .draft
            .id;
        book.attach(&design, &old).unwrap();
        let new = book
            .supersede(&old, None, &[(Attribute::Sfi, "362.005".into()), (Attribute::SupplierId, "SUP-A".into())], &mut tree)
            .unwrap();
        assert_eq!(new.draft.supersedes.as_ref(), Some(&old));
        assert!(new.draft.is_identifiable());
        let list = book.parts_list(&ship());
        assert_eq!(list.len(), 1);
        assert_eq!(list[0].draft.id, new.draft.id);
        assert!(matches!(
            book.concretize(&old, Attribute::SupplierId, "X", &mut tree),
            Err(PartsError::Superseded(..))
        ));
    }

    #[test]
    fn parts_list_is_ordered_and_deduplicated() {
        let mut book = PartsBook::new();
        let mut tree = SfiTree::new();
        assert!(book.parts_list(&ship()).is_empty());
        let g1 = book.create_design(None, &ship(), "A").unwrap().id.clone();
        let g2 = book.create_design(None, &ship(), "B").unwrap().id.clone();
        let a = book
            .create_draft(None, &ship(), &spec(Some("471.001"), Some("PUMP"), Some("SUP-B")), &mut tree)
            .unwrap()
            .draft
            .id;
        let b = book
            .create_draft(None, &ship(), &spec(Some("362.003"), Some("COOL-X"), Some("SUP-A")), &mut tree)
            .unwrap()
            .draft
            .id;
        let c = book
            .create_draft(None, &ship(), &spec(Some("362.010"), Some("FAN"), None), &mut tree)
            .unwrap()
            .draft
            .id;
        for d in [&a, &b, &c] {
            book.attach(&g1, d).unwrap();
        }
        book.attach(&g2, &a).unwrap();
        let list = book.parts_list(&ship());
        let ids: Vec<&DraftId> = list.iter().map(|e| &e.draft.id).collect();
        assert_eq!(ids, [&b, &c, &a]);
        assert_eq!(
            list[1].status,
            PartStatus::Incomplete {
                missing: vec![Attribute::SupplierId]
            }
        );
        let csv = parts_list_csv(&list);
        assert_eq!(
            csv,
            "sfi,name,supplier,status,missing\n\
             362.003,COOL-X,SUP-A,identifiable,\n\
             362.010,FAN,,incomplete,supplier_id\n\
             471.001,PUMP,SUP-B,identifiable,\n"
        );
    }

    #[test]
    fn designs_and_drafts_must_share_a_ship() {
        let mut book = PartsBook::new();
        let mut tree = SfiTree::new();
        let g = book.create_design(None, &ShipId::new("other"), "X").unwrap().id.clone();
        let d = book
            .create_draft(None, &ship(), &DraftSpec::default(), &mut tree)
            .unwrap()
            .draft
            .id;
        assert!(matches!(book.attach(&g, &d), Err(PartsError::ShipMismatch { .. })));
    }

    mod exhaustive {
        use super::*;
        use proptest::prelude::*;

        #[derive(Debug, Clone)]
        enum Op {
            Design(u8),
            Draft(Option<u8>, Option<u8>, Option<u8>, u8),
            Attach(u8, u8),
            Concretize(u8, u8, u8),
        }

        fn arb_op() -> impl Strategy<Value = Op> {
            prop_oneof![
                (0u8..2).prop_map(Op::Design),
                (
                    prop::option::of(0u8..4),
                    prop::option::of(0u8..4),
                    prop::option::of(0u8..3),
                    0u8..2
                )
                    .prop_map(|(a, b, c, s)| Op::Draft(a, b, c, s)),
                (0u8..6, 0u8..12).prop_map(|(g, d)| Op::Attach(g, d)),
                (0u8..12, 0u8..3, 0u8..4).prop_map(|(d, a, v)| Op::Concretize(d, a, v)),
            ]
        }

        proptest! {
            #[test]
            fn parts_list_covers_every_attached_draft(ops in prop::collection::vec(arb_op(), 0..40)) {
                let ships = [ShipId::new("s0"), ShipId::new("s1")];
                let mut trees = [SfiTree::new(), SfiTree::new()];
                let mut book = PartsBook::new();
                let mut designs: Vec<DesignId> = Vec::new();
                let mut drafts: Vec<DraftId> = Vec::new();
                let codes = ["362.003", "362.004", "471", "362"];
                for op in ops {
                    match op {
                        Op::Design(s) => designs.push(book.create_design(None, &ships[s as usize], "d").unwrap().id.clone()),
                        Op::Draft(a, b, c, s) => {
                            let spec = DraftSpec {
                                sfi: a.map(|i| codes[i as usize].to_string()),
                                name: b.map(|i| format!("N{i}")),
                                supplier_id: c.map(|i| format!("S{i}")),
                                required_doc_kinds: None,
                            };
                            drafts.push(book.create_draft(None, &ships[s as usize], &spec, &mut trees[s as usize]).unwrap().draft.id);
                        }
                        Op::Attach(g, d) => {
                            if let (Some(g), Some(d)) = (designs.get(g as usize), drafts.get(d as usize)) {
                                let _ = book.attach(g, d);
                            }
                        }
                        Op::Concretize(d, a, v) => {
                            if let Some(d) = drafts.get(d as usize) {
                                let ship = book.draft(d).unwrap().ship.clone();
                                let i = ships.iter().position(|s| *s == ship).unwrap();
                                let value = match a {
                                    0 => codes[v as usize].to_string(),
                                    1 => format!("N{v}"),
                                    _ => format!("S{v}"),
                                };
                                let _ = book.concretize(d, Attribute::ALL[a as usize], &value, &mut trees[i]);
                            }
                        }
                    }
                }
                for ship in &ships {
                    let list = book.parts_list(ship);
                    let mut expected: Vec<&DraftId> = book
                        .designs()
                        .filter(|g| g.ship == *ship)
                        .flat_map(|g| g.drafts.iter())
                        .collect();
                    expected.sort();
                    expected.dedup();
                    let mut got: Vec<&DraftId> = list.iter().map(|e| &e.draft.id).collect();
                    got.sort();
                    prop_assert_eq!(got, expected);
                    for pair in list.windows(2) {
                        prop_assert!((&pair[0].draft.sfi, &pair[0].draft.name, &pair[0].draft.id)
                            < (&pair[1].draft.sfi, &pair[1].draft.name, &pair[1].draft.id));
                    }
                    for e in &list {
                        prop_assert_eq!(e.status == PartStatus::Identifiable, e.draft.identity().is_some());
                    }
                }
            }
        }
    }
}
