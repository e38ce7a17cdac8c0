use std::collections::{BTreeMap, BTreeSet};

use chrono::{DateTime, NaiveDate, Utc};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::error::HubError;
use crate::access::{AccessGrant, GrantOutcome, GrantSet, Level};
use crate::flow::{
    midnight, Alert, AlertSubject, Availability, FlowAction, FlowBook, FlowPort, ProjectPlan,
    RequestingPlan, Severity,
};
use crate::ids::{DesignId, DraftId, OrgId, PlanId, ShipId, ShipTypeId, ThreadId};
use crate::partner::{EventLog, EventPayload, ManualRequest, Partner, Subject, Thread};
use crate::parts::{Attribute, Concretized, Design, DraftSpec, PartDraft, PartsBook};
use crate::sfi::{PartIdentity, SfiPath, SfiTree};
use crate::ship::{Fleet, InheritanceNote, TemplatePart};
use crate::store::{BlobStore, ContentHash, DocStore, DocumentId, DocumentVersion, StoreError};
use crate::sync::{apply, diff_document, HubView, SyncError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum Clock {
    Real,
    Simulated { today: NaiveDate },
}

/// Every state change the hub accepts. Commands are journaled as-is and
/// replayed in order to rebuild the state.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Command {
    /// First record of every journal.
    Init {
        project: String,
        owner: OrgId,
        clock: Clock,
        #[serde(default = "default_lead_time")]
        lead_time_days: i64,
    },
    RegisterShipType {
        #[serde(default)]
        id: Option<ShipTypeId>,
        name: String,
        #[serde(default)]
        parts: Vec<TemplatePart>,
    },
    CreateShip {
        #[serde(default)]
        id: Option<ShipId>,
        name: String,
        #[serde(default)]
        ship_type: Option<ShipTypeId>,
    },
    CreateDesign {
        #[serde(default)]
        id: Option<DesignId>,
        ship: ShipId,
        title: String,
    },
    CreateDraft {
        #[serde(default)]
        id: Option<DraftId>,
        ship: ShipId,
        #[serde(default, flatten)]
        spec: DraftSpec,
        #[serde(default)]
        design: Option<DesignId>,
    },
    Attach {
        design: DesignId,
        draft: DraftId,
    },
    Concretize {
        draft: DraftId,
        attribute: Attribute,
        value: String,
    },
    Supersede {
        draft: DraftId,
        #[serde(default)]
        new_id: Option<DraftId>,
        #[serde(default)]
        corrections: Vec<(Attribute, String)>,
    },
    /// Registers the blob `hash` (already in the blob store) as the next
    /// version of `doc`.
    Upload {
        doc: DocumentId,
        hash: ContentHash,
        #[serde(default)]
        format_tag: String,
    },
    Deprecate {
        doc: DocumentId,
        version: u32,
    },
    Grant {
        principal: OrgId,
        scope: SfiPath,
        level: Level,
    },
    Revoke {
        principal: OrgId,
        scope: SfiPath,
        level: Level,
    },
    ImportPlan {
        plan: ProjectPlan,
    },
    GeneratePlan {
        plan: PlanId,
        #[serde(default)]
        lead_time_days: Option<i64>,
    },
    ManualRequest {
        subject: Subject,
        body: String,
    },
    PostMessage {
        thread: ThreadId,
        body: String,
    },
    /// Moves the simulated clock forward and runs the scheduler.
    AdvanceClock {
        to: NaiveDate,
    },
    /// Runs the scheduler for the current day.
    Tick,
}

fn default_lead_time() -> i64 {
    crate::flow::DEFAULT_LEAD_TIME_DAYS
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Init { .. } => "init",
            Command::RegisterShipType { .. } => "register_ship_type",
            Command::CreateShip { .. } => "create_ship",
            Command::CreateDesign { .. } => "create_design",
            Command::CreateDraft { .. } => "create_draft",
            Command::Attach { .. } => "attach",
            Command::Concretize { .. } => "concretize",
            Command::Supersede { .. } => "supersede",
            Command::Upload { .. } => "upload",
            Command::Deprecate { .. } => "deprecate",
            Command::Grant { .. } => "grant",
            Command::Revoke { .. } => "revoke",
            Command::ImportPlan { .. } => "import_plan",
            Command::GeneratePlan { .. } => "generate_plan",
            Command::ManualRequest { .. } => "manual_request",
            Command::PostMessage { .. } => "post_message",
            Command::AdvanceClock { .. } => "advance_clock",
            Command::Tick => "tick",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "reply", rename_all = "snake_case")]
pub enum Reply {
    Initialized {
        project: String,
    },
    ShipType {
        id: ShipTypeId,
        name: String,
        parts: usize,
    },
    Ship {
        id: ShipId,
        name: String,
        ship_type: Option<ShipTypeId>,
        notes: Vec<InheritanceNote>,
    },
    Design {
        design: Design,
    },
    Draft {
        draft: PartDraft,
        alert: Option<Alert>,
    },
    Attached {
        design: DesignId,
        draft: DraftId,
    },
    Uploaded {
        doc: DocumentId,
        version: DocumentVersion,
        created: bool,
    },
    Deprecated {
        doc: DocumentId,
        version: DocumentVersion,
    },
    GrantChanged {
        changed: bool,
    },
    PlanImported {
        plan: PlanId,
        tasks: usize,
    },
    PlanGenerated {
        plan: RequestingPlan,
        alerts: Vec<Alert>,
    },
    Requested {
        request: ManualRequest,
    },
    Thread {
        thread: Thread,
    },
    Ticked {
        today: NaiveDate,
        actions: Vec<FlowAction>,
    },
}

/// One accepted command as stored in the journal.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JournalRecord {
    pub seq: u64,
    pub at: DateTime<Utc>,
    pub actor: OrgId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub key: Option<String>,
    pub command: Command,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
struct Remembered {
    actor: OrgId,
    fingerprint: String,
    reply: Reply,
}

/// The whole project. Every field is ordered, so the serialized form (and
/// with it the digest) depends only on the state.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProjectState {
    pub project: String,
    pub owner: OrgId,
    pub clock: Clock,
    pub tree: SfiTree,
    pub store: DocStore,
    pub grants: GrantSet,
    pub fleet: Fleet,
    pub parts: PartsBook,
    pub flow: FlowBook,
    pub partner: Partner,
    pub events: EventLog,
    pub orgs: BTreeSet<OrgId>,
    pub last_tick: Option<NaiveDate>,
    pub seq: u64,
    remembered: BTreeMap<String, Remembered>,
}

pub fn fingerprint(actor: &OrgId, command: &Command) -> String {
    let bytes = serde_json::to_vec(&(actor, command)).expect("commands serialize");
    hex::encode(Sha256::digest(bytes))
}

impl ProjectState {
    /// Builds the state from an `Init` record.
    pub fn genesis(record: &JournalRecord) -> Result<Self, HubError> {
        let Command::Init {
            project,
            owner,
            clock,
            lead_time_days,
        } = &record.command
        else {
            return Err(HubError::Invalid("the first record must be init".into()));
        };
        if record.seq != 1 {
            return Err(HubError::Invalid("init must be record 1".into()));
        }
        Ok(Self {
            project: project.clone(),
            owner: owner.clone(),
            clock: *clock,
            tree: SfiTree::new(),
            store: DocStore::new(),
            grants: GrantSet::bootstrap(owner, record.at),
            fleet: Fleet::new(),
            parts: PartsBook::new(),
            flow: FlowBook::new(*lead_time_days)?,
            partner: Partner::new(),
            events: EventLog::default(),
            orgs: [owner.clone()].into_iter().collect(),
            last_tick: None,
            seq: 1,
            remembered: BTreeMap::new(),
        })
    }

    /// SHA-256 over the canonical serialization.
    pub fn digest(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("state serializes");
        hex::encode(Sha256::digest(bytes))
    }

    pub fn today(&self, at: DateTime<Utc>) -> NaiveDate {
        match self.clock {
            Clock::Simulated { today } => today,
            Clock::Real => at.date_naive(),
        }
    }

    /// The reply stored under an idempotency key, if the same request was
    /// already accepted. A key reused for a different request is a conflict.
    pub fn remembered(
        &self,
        key: &str,
        actor: &OrgId,
        command: &Command,
    ) -> Result<Option<&Reply>, HubError> {
        match self.remembered.get(key) {
            None => Ok(None),
            Some(r) if r.actor == *actor && r.fingerprint == fingerprint(actor, command) => {
                Ok(Some(&r.reply))
            }
            Some(_) => Err(HubError::Conflict(format!(
                "idempotency key {key:?} was already used for a different request"
            ))),
        }
    }

    fn require_admin(&self, actor: &OrgId) -> Result<(), HubError> {
        Ok(self.grants.require(actor, &SfiPath::root(), Level::Admin)?)
    }

    pub fn require_reader(&self, actor: &OrgId) -> Result<(), HubError> {
        Ok(self.grants.require(actor, &SfiPath::root(), Level::Read)?)
    }

    fn candidates(&self) -> Vec<OrgId> {
        self.orgs.iter().cloned().collect()
    }

    /// Applies one journal record. On error the state may be partially
    /// changed; callers run this on a copy.
    pub fn apply(&mut self, record: &JournalRecord, blobs: &dyn BlobStore) -> Result<Reply, HubError> {
        if record.seq != self.seq + 1 {
            return Err(HubError::Invalid(format!(
                "record {} does not follow {}",
                record.seq, self.seq
            )));
        }
        let reply = self.execute(&record.actor, &record.command, record.at, blobs)?;
        self.seq = record.seq;
        self.orgs.insert(record.actor.clone());
        if let Some(key) = &record.key {
            self.remembered.insert(
                key.clone(),
                Remembered {
                    actor: record.actor.clone(),
                    fingerprint: fingerprint(&record.actor, &record.command),
                    reply: reply.clone(),
                },
            );
        }
        Ok(reply)
    }

    fn execute(
        &mut self,
        actor: &OrgId,
        command: &Command,
        at: DateTime<Utc>,
        blobs: &dyn BlobStore,
    ) -> Result<Reply, HubError> {
        match command {
            Command::Init { .. } => Err(HubError::Conflict("project already initialized".into())),
            Command::RegisterShipType { id, name, parts } => {
                self.require_admin(actor)?;
                let t = self.fleet.register_ship_type(id.clone(), name, parts)?;
                let reply = Reply::ShipType {
                    id: t.id.clone(),
                    name: t.name.clone(),
                    parts: t.template.part_count(),
                };
                for tp in parts {
                    self.register_global(&tp.part)?;
                }
                Ok(reply)
            }
            Command::CreateShip {
                id,
                name,
                ship_type,
            } => {
                self.require_admin(actor)?;
                let ship = self.fleet.create_ship(
                    id.clone(),
                    name,
                    ship_type.as_ref(),
                    actor,
                    &self.store,
                    at,
                )?;
                Ok(Reply::Ship {
                    id: ship.id.clone(),
                    name: ship.name.clone(),
                    ship_type: ship.ship_type.clone(),
                    notes: ship.notes.clone(),
                })
            }
            Command::CreateDesign { id, ship, title } => {
                self.require_admin(actor)?;
                self.fleet.ship(ship)?;
                let design = self.parts.create_design(id.clone(), ship, title)?.clone();
                Ok(Reply::Design { design })
            }
            Command::CreateDraft {
                id,
                ship,
                spec,
                design,
            } => {
                self.require_admin(actor)?;
                if let Some(d) = design {
                    self.parts.design(d)?;
                }
                let tree = &mut self.fleet.ship_mut(ship)?.replica.tree;
                let step = self.parts.create_draft(id.clone(), ship, spec, tree)?;
                if let Some(d) = design {
                    self.parts.attach(d, &step.draft.id)?;
                }
                self.after_registration(step, at)
            }
            Command::Attach { design, draft } => {
                self.require_admin(actor)?;
                self.parts.attach(design, draft)?;
                Ok(Reply::Attached {
                    design: design.clone(),
                    draft: draft.clone(),
                })
            }
            Command::Concretize {
                draft,
                attribute,
                value,
            } => {
                self.require_admin(actor)?;
                let ship = self.parts.draft(draft)?.ship.clone();
                let tree = &mut self.fleet.ship_mut(&ship)?.replica.tree;
                let step = self.parts.concretize(draft, *attribute, value, tree)?;
                self.after_registration(step, at)
            }
            Command::Supersede {
                draft,
                new_id,
                corrections,
            } => {
                self.require_admin(actor)?;
                let ship = self.parts.draft(draft)?.ship.clone();
                let tree = &mut self.fleet.ship_mut(&ship)?.replica.tree;
                let step = self
                    .parts
                    .supersede(draft, new_id.clone(), corrections, tree)?;
                self.after_registration(step, at)
            }
            Command::Upload {
                doc,
                hash,
                format_tag,
            } => {
                let outcome =
                    self.store
                        .upload_stored(blobs, &self.grants, doc, *hash, format_tag, actor, at)?;
                if outcome.created {
                    self.register_global(&doc.part)?;
                    self.tree.add_document(&doc.part, &doc.doc_name)?;
                    let candidates = self.candidates();
                    self.events.emit(
                        EventPayload::DocumentUploaded {
                            doc: doc.clone(),
                            version: outcome.version.version,
                            author: actor.clone(),
                        },
                        at,
                        candidates,
                        &self.grants,
                    );
                }
                Ok(Reply::Uploaded {
                    doc: doc.clone(),
                    version: outcome.version,
                    created: outcome.created,
                })
            }
            Command::Deprecate { doc, version } => {
                let (version, _) = self.store.deprecate(&self.grants, doc, *version, actor, at)?;
                Ok(Reply::Deprecated {
                    doc: doc.clone(),
                    version,
                })
            }
            Command::Grant {
                principal,
                scope,
                level,
            } => {
                let outcome = self.grants.grant(principal, *scope, *level, actor, at)?;
                self.orgs.insert(principal.clone());
                let changed = outcome == GrantOutcome::Added;
                if changed {
                    self.grant_event(principal, *scope, *level, actor, at, true);
                }
                Ok(Reply::GrantChanged { changed })
            }
            Command::Revoke {
                principal,
                scope,
                level,
            } => {
                let changed = self.grants.revoke(principal, *scope, *level, actor)?;
                if changed {
                    self.grant_event(principal, *scope, *level, actor, at, false);
                }
                Ok(Reply::GrantChanged { changed })
            }
            Command::ImportPlan { plan } => {
                self.require_admin(actor)?;
                self.fleet.ship(&plan.ship)?;
                let tasks = plan.tasks.len();
                let id = plan.id.clone();
                self.flow.import(plan.clone())?;
                Ok(Reply::PlanImported { plan: id, tasks })
            }
            Command::GeneratePlan {
                plan,
                lead_time_days,
            } => {
                self.require_admin(actor)?;
                let today = self.today(at);
                let generated =
                    self.flow
                        .generate(plan, &self.parts, *lead_time_days, actor, today)?;
                for poll in &generated.polls {
                    let supplier = poll.target.part().supplier_id.clone();
                    self.orgs.insert(supplier.clone());
                    self.events.emit(
                        EventPayload::RequestIssued {
                            poll: poll.clone(),
                            addressee: Some(supplier.clone()),
                            thread: None,
                        },
                        at,
                        [actor.clone(), supplier],
                        &self.grants,
                    );
                }
                for alert in &generated.alerts {
                    self.alert_event(alert, actor, at);
                }
                Ok(Reply::PlanGenerated {
                    plan: generated.plan,
                    alerts: generated.alerts,
                })
            }
            Command::ManualRequest { subject, body } => {
                if !self.orgs.contains(actor) {
                    return Err(HubError::Forbidden(format!(
                        "{actor} is not a known organization of this project"
                    )));
                }
                let request = self.partner.manual_request(
                    subject.clone(),
                    actor,
                    body,
                    at,
                    &self.tree,
                    &mut self.flow.polls,
                    &mut self.events,
                    &self.grants,
                )?;
                Ok(Reply::Requested { request })
            }
            Command::PostMessage { thread, body } => {
                let thread = self
                    .partner
                    .post_message(thread, actor, body, at, &mut self.events, &self.grants)?
                    .clone();
                Ok(Reply::Thread { thread })
            }
            Command::AdvanceClock { to } => {
                self.require_admin(actor)?;
                let Clock::Simulated { today } = self.clock else {
                    return Err(HubError::ClockIsReal);
                };
                if *to < today {
                    return Err(HubError::ClockBackwards { today, to: *to });
                }
                self.clock = Clock::Simulated { today: *to };
                self.run_tick(*to, midnight(*to), blobs)
            }
            Command::Tick => {
                self.require_admin(actor)?;
                let today = self.today(at);
                if self.last_tick.is_some_and(|t| today < t) {
                    return Err(HubError::ClockBackwards {
                        today: self.last_tick.expect("checked"),
                        to: today,
                    });
                }
                self.run_tick(today, at, blobs)
            }
        }
    }

    fn run_tick(
        &mut self,
        today: NaiveDate,
        at: DateTime<Utc>,
        blobs: &dyn BlobStore,
    ) -> Result<Reply, HubError> {
        self.last_tick = Some(today);
        let mut port = ShipSync {
            fleet: &mut self.fleet,
            tree: &self.tree,
            store: &self.store,
            grants: &self.grants,
            blobs,
        };
        let actions = self.flow.tick(today, &mut port);
        for action in &actions {
            match action {
                FlowAction::Polled { poll, addressee } => {
                    let mut candidates = vec![poll.requester.clone()];
                    candidates.extend(addressee.iter().cloned());
                    self.events.emit(
                        EventPayload::RequestIssued {
                            poll: poll.clone(),
                            addressee: addressee.clone(),
                            thread: None,
                        },
                        at,
                        candidates,
                        &self.grants,
                    );
                }
                FlowAction::AlertRaised { alert } => {
                    let requester = self.owner.clone();
                    self.alert_event(alert, &requester, at);
                }
                FlowAction::StatusChanged { .. } | FlowAction::AlertResolved { .. } => {}
            }
        }
        Ok(Reply::Ticked { today, actions })
    }

    fn alert_event(&mut self, alert: &Alert, requester: &OrgId, at: DateTime<Utc>) {
        let mut candidates = vec![self.owner.clone(), requester.clone()];
        candidates.dedup();
        self.events.emit(
            EventPayload::AlertRaised {
                alert: alert.clone(),
            },
            at,
            candidates,
            &self.grants,
        );
    }

    fn grant_event(
        &mut self,
        principal: &OrgId,
        scope: SfiPath,
        level: Level,
        actor: &OrgId,
        at: DateTime<Utc>,
        added: bool,
    ) {
        let candidates = self.candidates();
        self.events.emit(
            EventPayload::GrantChanged {
                grant: AccessGrant {
                    principal: principal.clone(),
                    scope,
                    level,
                    granted_by: actor.clone(),
                    granted_at: at,
                },
                added,
            },
            at,
            candidates,
            &self.grants,
        );
    }

    fn register_global(&mut self, part: &PartIdentity) -> Result<(), HubError> {
        self.tree.register_part(part.clone())?;
        self.orgs.insert(part.supplier_id.clone());
        Ok(())
    }

    /// A draft that just became identifiable also joins the project tree.
    /// A refusal at either level flags the draft and raises one alert.
    fn after_registration(&mut self, step: Concretized, at: DateTime<Utc>) -> Result<Reply, HubError> {
        let mut refusal = step.registration_error().map(|e| e.to_string());
        let newly_registered = refusal.is_none() && step.registration.is_some();
        let mut draft = step.draft;
        if newly_registered {
            let part = draft.identity().expect("registered drafts are identifiable");
            if let Err(e) = self.register_global(&part) {
                let reason = e.to_string();
                draft = self.parts.flag_registration(&draft.id, reason.clone())?.clone();
                refusal = Some(reason);
            }
        }
        let alert = refusal.and_then(|reason| {
            self.flow.alerts.raise(
                AlertSubject::Registration {
                    draft: draft.id.clone(),
                },
                Severity::Problem,
                format!("draft {} could not be registered: {reason}", draft.id),
                at,
            )
        });
        if let Some(a) = &alert {
            let owner = self.owner.clone();
            self.alert_event(a, &owner, at);
        }
        Ok(Reply::Draft { draft, alert })
    }
}

/// Bytes are checked against their hash and dropped: ship replicas live on
/// the hub and share its blob store.
struct VerifyOnly;

impl BlobStore for VerifyOnly {
    fn put(&self, bytes: &[u8]) -> Result<ContentHash, StoreError> {
        Ok(ContentHash::of(bytes))
    }

    fn get(&self, _: &ContentHash) -> Result<Option<Vec<u8>>, StoreError> {
        Ok(None)
    }

    fn contains(&self, _: &ContentHash) -> bool {
        false
    }
}

/// The scheduler's access to the hub: pulls a document into a ship's replica
/// on behalf of the ship's requester.
struct ShipSync<'a> {
    fleet: &'a mut Fleet,
    tree: &'a SfiTree,
    store: &'a DocStore,
    grants: &'a GrantSet,
    blobs: &'a dyn BlobStore,
}

impl FlowPort for ShipSync<'_> {
    fn satisfy(&mut self, ship: &ShipId, requester: &OrgId, doc: &DocumentId) -> Availability {
        let current = match self.store.latest(doc) {
            Ok(v) if !v.deprecated => v.version,
            _ => return Availability::Absent,
        };
        if !self
            .grants
            .check_part(requester, &doc.part, Level::Read)
        {
            return Availability::Unreadable;
        }
        let Ok(ship) = self.fleet.ship_mut(ship) else {
            return Availability::Failed {
                reason: format!("unknown ship {ship}"),
            };
        };
        let replica = &mut ship.replica;
        if let Err(e) = replica.register_part(doc.part.clone()) {
            return Availability::Failed {
                reason: e.to_string(),
            };
        }
        let view = HubView {
            tree: self.tree,
            store: self.store,
            grants: self.grants,
        };
        let changes = diff_document(&replica.summary(), view, requester, doc);
        let blobs = self.blobs;
        let report = apply(
            replica,
            &changes,
            |h| {
                blobs
                    .get(h)?
                    .ok_or(SyncError::Store(StoreError::MissingBlob(*h)))
            },
            &VerifyOnly,
        );
        if let Some((_, err)) = report.failed.first() {
            return Availability::Failed {
                reason: err.to_string(),
            };
        }
        Availability::Delivered { version: current }
    }
}
