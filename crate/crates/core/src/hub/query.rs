use serde::{Deserialize, Serialize};

use super::error::HubError;
use super::state::ProjectState;
use crate::access::Level;
use crate::flow::{Alert, PollRecord, ProjectPlan, RequestingPlan};
use crate::ids::{OrgId, PlanId, ShipId, ShipTypeId, ThreadId};
use crate::partner::{Event, Thread};
use crate::parts::PartsListEntry;
use crate::sfi::SfiPath;
use crate::ship::{InheritanceNote, Ship};
use crate::store::{ContentHash, DocumentId, DocumentVersion};
use crate::sync::{diff, ChangeSet, HubView, ReplicaSummary};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShipTypeSummary {
    pub id: ShipTypeId,
    pub name: String,
    pub parts: usize,
    pub documents: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShipSummary {
    pub id: ShipId,
    pub name: String,
    pub ship_type: Option<ShipTypeId>,
    pub parts: usize,
    pub notes: Vec<InheritanceNote>,
}

impl ShipSummary {
    fn of(ship: &Ship) -> Self {
        Self {
            id: ship.id.clone(),
            name: ship.name.clone(),
            ship_type: ship.ship_type.clone(),
            parts: ship.tree().part_count(),
            notes: ship.notes.clone(),
        }
    }
}

/// Read-side operations. Each one checks the caller against the grant set.
impl ProjectState {
    pub fn ship_types_for(&self, actor: &OrgId) -> Result<Vec<ShipTypeSummary>, HubError> {
        self.require_reader(actor)?;
        Ok(self
            .fleet
            .ship_types()
            .map(|t| ShipTypeSummary {
                id: t.id.clone(),
                name: t.name.clone(),
                parts: t.template.part_count(),
                documents: t.template.documents().count(),
            })
            .collect())
    }

    pub fn ships_for(&self, actor: &OrgId) -> Result<Vec<ShipSummary>, HubError> {
        self.require_reader(actor)?;
        Ok(self.fleet.ships().map(ShipSummary::of).collect())
    }

    pub fn ship_for(&self, actor: &OrgId, id: &ShipId) -> Result<&Ship, HubError> {
        self.require_reader(actor)?;
        Ok(self.fleet.ship(id)?)
    }

    pub fn ship_summary_for(&self, actor: &OrgId, id: &ShipId) -> Result<ShipSummary, HubError> {
        self.ship_for(actor, id).map(ShipSummary::of)
    }

    pub fn parts_list_for(
        &self,
        actor: &OrgId,
        ship: &ShipId,
    ) -> Result<Vec<PartsListEntry>, HubError> {
        self.require_reader(actor)?;
        self.fleet.ship(ship)?;
        Ok(self.parts.parts_list(ship))
    }

    pub fn versions_for(
        &self,
        actor: &OrgId,
        doc: &DocumentId,
    ) -> Result<Vec<DocumentVersion>, HubError> {
        self.grants.require_part(actor, &doc.part, Level::Read)?;
        let versions = self.store.versions(doc);
        if versions.is_empty() {
            return Err(HubError::NotFound(format!("unknown document {doc}")));
        }
        Ok(versions.to_vec())
    }

    pub fn project_plan_for(&self, actor: &OrgId, plan: &PlanId) -> Result<&ProjectPlan, HubError> {
        self.require_reader(actor)?;
        Ok(self.flow.plan(plan)?)
    }

    pub fn requesting_plan_for(
        &self,
        actor: &OrgId,
        plan: &PlanId,
    ) -> Result<&RequestingPlan, HubError> {
        self.require_reader(actor)?;
        Ok(self.flow.requesting(plan)?)
    }

    pub fn alerts_for(&self, actor: &OrgId) -> Result<Vec<Alert>, HubError> {
        self.require_reader(actor)?;
        Ok(self.flow.alerts.all().to_vec())
    }

    pub fn polls_for(&self, actor: &OrgId) -> Result<Vec<PollRecord>, HubError> {
        self.require_reader(actor)?;
        Ok(self.flow.polls.records().to_vec())
    }

    pub fn thread_for(&self, actor: &OrgId, id: &ThreadId) -> Result<&Thread, HubError> {
        let thread = self.partner.thread(id)?;
        if !thread.participants.contains(actor) {
            return Err(HubError::Forbidden(format!(
                "{actor} is not a participant of thread {id}"
            )));
        }
        Ok(thread)
    }

    pub fn events_for(&self, actor: &OrgId, since: u64) -> Vec<Event> {
        self.events
            .events_for(actor, since)
            .into_iter()
            .cloned()
            .collect()
    }

    /// Anyone may ask about themselves; asking about others takes Admin at
    /// the location.
    pub fn check_for(
        &self,
        actor: &OrgId,
        org: &OrgId,
        location: &SfiPath,
        level: Level,
    ) -> Result<bool, HubError> {
        if actor != org {
            self.grants.require(actor, location, Level::Admin)?;
        }
        Ok(self.grants.check(org, location, level))
    }

    pub fn diff_for(&self, actor: &OrgId, summary: &ReplicaSummary) -> ChangeSet {
        diff(
            summary,
            HubView {
                tree: &self.tree,
                store: &self.store,
                grants: &self.grants,
            },
            actor,
        )
    }

    pub fn may_fetch(&self, actor: &OrgId, hash: &ContentHash) -> Result<(), HubError> {
        if self.store.hash_readable_by(hash, actor, &self.grants) {
            Ok(())
        } else {
            Err(HubError::Forbidden(format!("{actor} may not read blob {hash}")))
        }
    }
}
