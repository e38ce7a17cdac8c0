//! Project plans, requesting plans and the polling scheduler.
//!
//! A project plan is a dated task list whose tasks reference part drafts or
//! designs. From it we derive a requesting plan: for each identifiable part
//! and each document kind it requires, the date the document is first needed
//! and the date it should be requested. `tick` then walks the plan forward,
//! pulling documents that are already on the hub, asking suppliers for those
//! that are not, and alerting the yard when something is late.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, Duration, NaiveDate, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ids::{DesignId, DraftId, OrgId, PlanId, Sequence, ShipId, TaskId};
use crate::parts::{PartDraft, PartsBook};
use crate::sfi::PartIdentity;
use crate::store::DocumentId;

pub const DEFAULT_LEAD_TIME_DAYS: i64 = 14;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FlowError {
    #[error("task {task} ends {end} before it starts {start}")]
    TaskEndsBeforeStart {
        task: TaskId,
        start: NaiveDate,
        end: NaiveDate,
    },
    #[error("task id {0} appears twice")]
    DuplicateTask(TaskId),
    #[error("plan {0} references unknown draft {1}")]
    UnknownDraft(PlanId, DraftId),
    #[error("plan {0} references unknown design {1}")]
    UnknownDesign(PlanId, DesignId),
    #[error("draft {draft} belongs to ship {draft_ship}, not to the plan's ship {plan_ship}")]
    ForeignDraft {
        draft: DraftId,
        draft_ship: ShipId,
        plan_ship: ShipId,
    },
    #[error("lead time must not be negative, got {0} days")]
    NegativeLeadTime(i64),
    #[error("unknown plan {0}")]
    UnknownPlan(PlanId),
    #[error("plan {0} already exists")]
    DuplicatePlan(PlanId),
    #[error("plan {0} has no requesting plan yet")]
    NotGenerated(PlanId),
    #[error("plan file line {line}: {reason}")]
    BadRecord { line: u64, reason: String },
}

// ---------------------------------------------------------------------------
// Project plans

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "kind", content = "id", rename_all = "snake_case")]
pub enum PlanRef {
    Draft(DraftId),
    Design(DesignId),
}

impl fmt::Display for PlanRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PlanRef::Draft(id) => write!(f, "draft:{id}"),
            PlanRef::Design(id) => write!(f, "design:{id}"),
        }
    }
}

impl FromStr for PlanRef {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.split_once(':') {
            Some(("draft", id)) if !id.is_empty() => Ok(PlanRef::Draft(DraftId::new(id))),
            Some(("design", id)) if !id.is_empty() => Ok(PlanRef::Design(DesignId::new(id))),
            _ => Err(format!("expected draft:<id> or design:<id>, got {s:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Task {
    pub id: TaskId,
    pub name: String,
    pub start: NaiveDate,
    pub end: NaiveDate,
    pub refs: Vec<PlanRef>,
}

/// A document the supplier is already contractually bound to deliver.
/// It produces a requesting-plan entry but is never actively polled.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Contract {
    pub draft: DraftId,
    pub doc_kind: String,
    pub due: NaiveDate,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProjectPlan {
    pub id: PlanId,
    pub ship: ShipId,
    pub tasks: Vec<Task>,
    #[serde(default)]
    pub contracts: Vec<Contract>,
}

impl ProjectPlan {
    pub fn validate(&self) -> Result<(), FlowError> {
        let mut seen = BTreeSet::new();
        for task in &self.tasks {
            if task.end < task.start {
                return Err(FlowError::TaskEndsBeforeStart {
                    task: task.id.clone(),
                    start: task.start,
                    end: task.end,
                });
            }
            if !seen.insert(&task.id) {
                return Err(FlowError::DuplicateTask(task.id.clone()));
            }
        }
        Ok(())
    }

    /// Record-structured export. One record per line:
    ///
    /// ```text
    /// plan,<plan id>,<ship id>
    /// task,<task id>,<name>,<start>,<end>[,draft:<id>|design:<id>]...
    /// contract,<draft id>,<doc kind>,<due>
    /// ```
    pub fn to_records(&self) -> String {
        let mut w = csv::WriterBuilder::new()
            .flexible(true)
            .from_writer(Vec::new());
        w.write_record(["plan", self.id.as_str(), self.ship.as_str()])
            .expect("in-memory write");
        for task in &self.tasks {
            let mut row = vec![
                "task".to_owned(),
                task.id.to_string(),
                task.name.clone(),
                task.start.to_string(),
                task.end.to_string(),
            ];
            row.extend(task.refs.iter().map(|r| r.to_string()));
            w.write_record(&row).expect("in-memory write");
        }
        for c in &self.contracts {
            w.write_record([
                "contract",
                c.draft.as_str(),
                c.doc_kind.as_str(),
                &c.due.to_string(),
            ])
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 fields")
    }

    pub fn from_records(text: &str) -> Result<Self, FlowError> {
        let mut r = csv::ReaderBuilder::new()
            .has_headers(false)
            .flexible(true)
            .comment(Some(b'#'))
            .from_reader(text.as_bytes());
        let mut header: Option<(PlanId, ShipId)> = None;
        let mut tasks = Vec::new();
        let mut contracts = Vec::new();
        for record in r.records() {
            let record = record.map_err(|e| FlowError::BadRecord {
                line: e.position().map(|p| p.line()).unwrap_or(0),
                reason: e.to_string(),
            })?;
            let line = record.position().map(|p| p.line()).unwrap_or(0);
            let bad = |reason: String| FlowError::BadRecord { line, reason };
            let field = |i: usize, what: &str| {
                record
                    .get(i)
                    .filter(|s| !s.is_empty())
                    .ok_or_else(|| bad(format!("missing {what}")))
            };
            let date = |i: usize, what: &str| -> Result<NaiveDate, FlowError> {
                let raw = field(i, what)?;
                raw.parse()
                    .map_err(|_| bad(format!("{what} {raw:?} is not a YYYY-MM-DD date")))
            };
            match record.get(0) {
                Some("plan") => {
                    if header.is_some() {
                        return Err(bad("second plan record".into()));
                    }
                    header = Some((
                        PlanId::new(field(1, "plan id")?),
                        ShipId::new(field(2, "ship id")?),
                    ));
                }
                Some("task") => {
                    let refs = record
                        .iter()
                        .skip(5)
                        .filter(|s| !s.is_empty())
                        .map(|s| s.parse().map_err(bad))
                        .collect::<Result<Vec<PlanRef>, _>>()?;
                    tasks.push(Task {
                        id: TaskId::new(field(1, "task id")?),
                        name: record.get(2).unwrap_or_default().to_owned(),
                        start: date(3, "start")?,
                        end: date(4, "end")?,
                        refs,
                    });
                }
                Some("contract") => contracts.push(Contract {
                    draft: DraftId::new(field(1, "draft id")?),
                    doc_kind: field(2, "doc kind")?.to_owned(),
                    due: date(3, "due date")?,
                }),
                Some(other) => return Err(bad(format!("unknown record type {other:?}"))),
                None => {}
            }
        }
        let (id, ship) = header.ok_or(FlowError::BadRecord {
            line: 1,
            reason: "missing plan record".into(),
        })?;
        let plan = ProjectPlan {
            id,
            ship,
            tasks,
            contracts,
        };
        plan.validate()?;
        Ok(plan)
    }
}

// ---------------------------------------------------------------------------
// Polls

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PollMode {
    Manual,
    Automatic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Visibility {
    Implicit,
    Explicit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PollClass {
    Contract,
    Share,
    Request,
    Workflow,
}

pub fn classify_poll(mode: PollMode, visibility: Visibility) -> PollClass {
    match (mode, visibility) {
        (PollMode::Manual, Visibility::Implicit) => PollClass::Contract,
        (PollMode::Automatic, Visibility::Implicit) => PollClass::Share,
        (PollMode::Manual, Visibility::Explicit) => PollClass::Request,
        (PollMode::Automatic, Visibility::Explicit) => PollClass::Workflow,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PollTarget {
    Part { part: PartIdentity },
    Document { doc: DocumentId },
}

impl PollTarget {
    pub fn part(&self) -> &PartIdentity {
        match self {
            PollTarget::Part { part } => part,
            PollTarget::Document { doc } => &doc.part,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PollRecord {
    pub id: u64,
    pub target: PollTarget,
    pub mode: PollMode,
    pub visibility: Visibility,
    pub classification: PollClass,
    pub requester: OrgId,
    pub at: DateTime<Utc>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PollLog {
    records: Vec<PollRecord>,
    ids: Sequence,
}

impl PollLog {
    pub fn record(
        &mut self,
        target: PollTarget,
        mode: PollMode,
        visibility: Visibility,
        requester: &OrgId,
        at: DateTime<Utc>,
    ) -> PollRecord {
        let poll = PollRecord {
            id: self.ids.next_value(),
            target,
            mode,
            visibility,
            classification: classify_poll(mode, visibility),
            requester: requester.clone(),
            at,
        };
        self.records.push(poll.clone());
        poll
    }

    pub fn records(&self) -> &[PollRecord] {
        &self.records
    }
}

// ---------------------------------------------------------------------------
// Alerts

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Severity {
    Warning,
    Problem,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AlertSubject {
    Entry {
        plan: PlanId,
        part: PartIdentity,
        doc_kind: String,
    },
    Draft {
        plan: PlanId,
        draft: DraftId,
    },
    /// An identifiable draft whose part could not be registered.
    Registration {
        draft: DraftId,
    },
}

impl AlertSubject {
    pub fn part(&self) -> Option<&PartIdentity> {
        match self {
            AlertSubject::Entry { part, .. } => Some(part),
            AlertSubject::Draft { .. } | AlertSubject::Registration { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Alert {
    pub id: u64,
    pub severity: Severity,
    pub subject: AlertSubject,
    pub message: String,
    pub raised_at: DateTime<Utc>,
    pub resolved_at: Option<DateTime<Utc>>,
}

impl Alert {
    pub fn is_open(&self) -> bool {
        self.resolved_at.is_none()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Alerts {
    alerts: Vec<Alert>,
    ids: Sequence,
}

impl Alerts {
    /// Raises an alert unless one is already open for the same subject and
    /// severity.
    pub fn raise(
        &mut self,
        subject: AlertSubject,
        severity: Severity,
        message: String,
        at: DateTime<Utc>,
    ) -> Option<Alert> {
        if self
            .alerts
            .iter()
            .any(|a| a.is_open() && a.severity == severity && a.subject == subject)
        {
            return None;
        }
        let alert = Alert {
            id: self.ids.next_value(),
            severity,
            subject,
            message,
            raised_at: at,
            resolved_at: None,
        };
        self.alerts.push(alert.clone());
        Some(alert)
    }

    /// Closes every open alert about `subject`, returning their ids.
    pub fn resolve(&mut self, subject: &AlertSubject, at: DateTime<Utc>) -> Vec<u64> {
        let mut closed = Vec::new();
        for a in self.alerts.iter_mut() {
            if a.is_open() && a.subject == *subject {
                a.resolved_at = Some(at);
                closed.push(a.id);
            }
        }
        closed
    }

    pub fn all(&self) -> &[Alert] {
        &self.alerts
    }

    pub fn open(&self) -> impl Iterator<Item = &Alert> {
        self.alerts.iter().filter(|a| a.is_open())
    }
}

// ---------------------------------------------------------------------------
// Requesting plans

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntryStatus {
    Pending,
    Requested,
    Late,
    Delivered,
}

impl EntryStatus {
    /// Allowed forward moves. A late document that finally arrives still
    /// counts as delivered; nothing ever moves back.
    pub fn can_become(self, next: EntryStatus) -> bool {
        use EntryStatus::*;
        matches!(
            (self, next),
            (Pending, Requested) | (Pending, Delivered) | (Pending, Late)
                | (Requested, Delivered) | (Requested, Late) | (Late, Delivered)
        )
    }
}

impl fmt::Display for EntryStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EntryStatus::Pending => "pending",
            EntryStatus::Requested => "requested",
            EntryStatus::Late => "late",
            EntryStatus::Delivered => "delivered",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntryOrigin {
    Task,
    Contract,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Entry {
    pub part: PartIdentity,
    pub doc_kind: String,
    pub need_by: NaiveDate,
    pub request_at: NaiveDate,
    pub status: EntryStatus,
    pub origin: EntryOrigin,
    pub delivered_version: Option<u32>,
    /// Last day the hub was consulted for this entry.
    pub last_checked: Option<NaiveDate>,
}

impl Entry {
    pub fn doc(&self) -> DocumentId {
        DocumentId {
            part: self.part.clone(),
            doc_name: self.doc_kind.clone(),
        }
    }

    fn subject(&self, plan: &PlanId) -> AlertSubject {
        AlertSubject::Entry {
            plan: plan.clone(),
            part: self.part.clone(),
            doc_kind: self.doc_kind.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RequestingPlan {
    pub plan: PlanId,
    pub ship: ShipId,
    pub requester: OrgId,
    pub lead_time_days: i64,
    pub generated_on: NaiveDate,
    pub entries: Vec<Entry>,
}

impl RequestingPlan {
    pub fn entry(&self, part: &PartIdentity, doc_kind: &str) -> Option<&Entry> {
        self.entries
            .iter()
            .find(|e| e.part == *part && e.doc_kind == doc_kind)
    }

    pub fn count(&self, status: EntryStatus) -> usize {
        self.entries.iter().filter(|e| e.status == status).count()
    }

    /// `need_by,request_at,sfi,name,supplier,doc_kind,status,origin`
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "need_by", "request_at", "sfi", "name", "supplier", "doc_kind", "status", "origin",
        ])
        .expect("in-memory write");
        for e in &self.entries {
            w.write_record([
                e.need_by.to_string(),
                e.request_at.to_string(),
                e.part.sfi.to_string(),
                e.part.name.clone(),
                e.part.supplier_id.to_string(),
                e.doc_kind.clone(),
                e.status.to_string(),
                match e.origin {
                    EntryOrigin::Task => "task".into(),
                    EntryOrigin::Contract => "contract".into(),
                },
            ])
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 fields")
    }
}

/// What generation produced besides the plan itself.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Generated {
    pub plan: RequestingPlan,
    pub alerts: Vec<Alert>,
    pub polls: Vec<PollRecord>,
}

fn resolve_draft<'a>(
    plan: &ProjectPlan,
    parts: &'a PartsBook,
    id: &DraftId,
) -> Result<&'a PartDraft, FlowError> {
    let mut draft = parts
        .draft(id)
        .map_err(|_| FlowError::UnknownDraft(plan.id.clone(), id.clone()))?;
    while let Some(next) = &draft.superseded_by {
        draft = parts
            .draft(next)
            .map_err(|_| FlowError::UnknownDraft(plan.id.clone(), next.clone()))?;
    }
    if draft.ship != plan.ship {
        return Err(FlowError::ForeignDraft {
            draft: id.clone(),
            draft_ship: draft.ship.clone(),
            plan_ship: plan.ship.clone(),
        });
    }
    Ok(draft)
}

fn expand_refs<'a>(
    plan: &ProjectPlan,
    parts: &'a PartsBook,
    refs: &[PlanRef],
) -> Result<Vec<&'a PartDraft>, FlowError> {
    let mut out = Vec::new();
    for r in refs {
        match r {
            PlanRef::Draft(id) => out.push(resolve_draft(plan, parts, id)?),
            PlanRef::Design(id) => {
                let design = parts
                    .design(id)
                    .map_err(|_| FlowError::UnknownDesign(plan.id.clone(), id.clone()))?;
                for d in &design.drafts {
                    out.push(resolve_draft(plan, parts, d)?);
                }
            }
        }
    }
    Ok(out)
}

/// Computes the needs of a plan: for every identifiable part and required
/// kind, the earliest date and whether a contract covers it. Also returns
/// the drafts that are not yet identifiable.
#[allow(clippy::type_complexity)]
fn collect_needs(
    plan: &ProjectPlan,
    parts: &PartsBook,
) -> Result<
    (
        BTreeMap<(PartIdentity, String), (NaiveDate, bool)>,
        BTreeSet<DraftId>,
    ),
    FlowError,
> {
    let mut needs: BTreeMap<(PartIdentity, String), (NaiveDate, bool)> = BTreeMap::new();
    let mut incomplete = BTreeSet::new();
    let mut need = |draft: &PartDraft, kind: &str, date: NaiveDate, contract: bool| match draft
        .identity()
    {
        Some(part) => {
            let slot = needs.entry((part, kind.to_owned())).or_insert((date, contract));
            slot.0 = slot.0.min(date);
            slot.1 |= contract;
        }
        None => {
            incomplete.insert(draft.id.clone());
        }
    };
    for task in &plan.tasks {
        for draft in expand_refs(plan, parts, &task.refs)? {
            if draft.identity().is_none() {
                need(draft, "", task.start, false);
                continue;
            }
            for kind in &draft.required_doc_kinds {
                need(draft, kind, task.start, false);
            }
        }
    }
    for c in &plan.contracts {
        let draft = resolve_draft(plan, parts, &c.draft)?;
        need(draft, &c.doc_kind, c.due, true);
    }
    Ok((needs, incomplete))
}

pub fn midnight(day: NaiveDate) -> DateTime<Utc> {
    day.and_time(chrono::NaiveTime::MIN).and_utc()
}

/// Builds the requesting plan for `plan`. Entries of `previous` with the same
/// (part, kind) keep their progress.
#[allow(clippy::too_many_arguments)]
pub fn generate_requesting_plan(
    plan: &ProjectPlan,
    parts: &PartsBook,
    lead_time_days: i64,
    requester: &OrgId,
    today: NaiveDate,
    previous: Option<&RequestingPlan>,
    alerts: &mut Alerts,
    polls: &mut PollLog,
) -> Result<Generated, FlowError> {
    if lead_time_days < 0 {
        return Err(FlowError::NegativeLeadTime(lead_time_days));
    }
    plan.validate()?;
    let (needs, incomplete) = collect_needs(plan, parts)?;
    let lead = Duration::days(lead_time_days);
    let at = midnight(today);

    let mut entries: Vec<Entry> = needs
        .into_iter()
        .map(|((part, doc_kind), (need_by, contract))| {
            let carried = previous.and_then(|p| p.entry(&part, &doc_kind));
            Entry {
                request_at: need_by - lead,
                need_by,
                status: carried.map_or(EntryStatus::Pending, |e| e.status),
                origin: if contract {
                    EntryOrigin::Contract
                } else {
                    EntryOrigin::Task
                },
                delivered_version: carried.and_then(|e| e.delivered_version),
                last_checked: carried.and_then(|e| e.last_checked),
                part,
                doc_kind,
            }
        })
        .collect();
    entries.sort_by(|a, b| {
        (a.need_by, a.part.path(), &a.doc_kind, &a.part).cmp(&(
            b.need_by,
            b.part.path(),
            &b.doc_kind,
            &b.part,
        ))
    });

    let mut raised = Vec::new();
    for draft in incomplete {
        let missing: Vec<String> = parts
            .draft(&draft)
            .map(|d| d.missing().iter().map(|a| a.to_string()).collect())
            .unwrap_or_default();
        raised.extend(alerts.raise(
            AlertSubject::Draft {
                plan: plan.id.clone(),
                draft: draft.clone(),
            },
            Severity::Warning,
            format!(
                "draft {draft} is needed by the plan but still lacks {}",
                missing.join(", ")
            ),
            at,
        ));
    }
    for e in &entries {
        if e.request_at < today && e.status == EntryStatus::Pending {
            raised.extend(alerts.raise(
                e.subject(&plan.id),
                Severity::Warning,
                format!(
                    "{} for {} should have been requested on {}",
                    e.doc_kind, e.part, e.request_at
                ),
                at,
            ));
        }
    }
    let mut issued = Vec::new();
    for e in &entries {
        let already = previous.is_some_and(|p| {
            p.entry(&e.part, &e.doc_kind)
                .is_some_and(|old| old.origin == EntryOrigin::Contract)
        });
        if e.origin == EntryOrigin::Contract && !already {
            issued.push(polls.record(
                PollTarget::Document { doc: e.doc() },
                PollMode::Manual,
                Visibility::Implicit,
                requester,
                at,
            ));
        }
    }

    Ok(Generated {
        plan: RequestingPlan {
            plan: plan.id.clone(),
            ship: plan.ship.clone(),
            requester: requester.clone(),
            lead_time_days,
            generated_on: today,
            entries,
        },
        alerts: raised,
        polls: issued,
    })
}

// ---------------------------------------------------------------------------
// Ticking

/// What the hub knows about a document the plan needs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Availability {
    /// The document was on the hub and is now in the ship's replica.
    Delivered { version: u32 },
    Absent,
    /// The document exists but the requester may not read it.
    Unreadable,
    /// The pull failed, for example on a hash mismatch.
    Failed { reason: String },
}

/// The flow scheduler's view of the hub.
pub trait FlowPort {
    fn satisfy(&mut self, ship: &ShipId, requester: &OrgId, doc: &DocumentId) -> Availability;
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "action", rename_all = "snake_case")]
pub enum FlowAction {
    Polled {
        poll: PollRecord,
        /// The organization the poll is addressed to, if any.
        addressee: Option<OrgId>,
    },
    StatusChanged {
        plan: PlanId,
        part: PartIdentity,
        doc_kind: String,
        from: EntryStatus,
        to: EntryStatus,
    },
    AlertRaised {
        alert: Alert,
    },
    AlertResolved {
        alert: u64,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlowBook {
    plans: BTreeMap<PlanId, ProjectPlan>,
    requesting: BTreeMap<PlanId, RequestingPlan>,
    pub polls: PollLog,
    pub alerts: Alerts,
    pub lead_time_days: i64,
    plan_ids: Sequence,
}

impl Default for FlowBook {
    fn default() -> Self {
        Self {
            plans: BTreeMap::new(),
            requesting: BTreeMap::new(),
            polls: PollLog::default(),
            alerts: Alerts::default(),
            lead_time_days: DEFAULT_LEAD_TIME_DAYS,
            plan_ids: Sequence::default(),
        }
    }
}

impl FlowBook {
    pub fn new(lead_time_days: i64) -> Result<Self, FlowError> {
        if lead_time_days < 0 {
            return Err(FlowError::NegativeLeadTime(lead_time_days));
        }
        Ok(Self {
            lead_time_days,
            ..Self::default()
        })
    }

    pub fn next_plan_id(&mut self) -> PlanId {
        loop {
            let id = PlanId::new(self.plan_ids.next_id("plan"));
            if !self.plans.contains_key(&id) {
                return id;
            }
        }
    }

    /// Stores a plan. Re-importing an existing id replaces it.
    pub fn import(&mut self, plan: ProjectPlan) -> Result<&ProjectPlan, FlowError> {
        plan.validate()?;
        let id = plan.id.clone();
        self.plans.insert(id.clone(), plan);
        Ok(&self.plans[&id])
    }

    pub fn plan(&self, id: &PlanId) -> Result<&ProjectPlan, FlowError> {
        self.plans
            .get(id)
            .ok_or_else(|| FlowError::UnknownPlan(id.clone()))
    }

    pub fn plans(&self) -> impl Iterator<Item = &ProjectPlan> {
        self.plans.values()
    }

    pub fn requesting(&self, id: &PlanId) -> Result<&RequestingPlan, FlowError> {
        self.plan(id)?;
        self.requesting
            .get(id)
            .ok_or_else(|| FlowError::NotGenerated(id.clone()))
    }

    pub fn requesting_plans(&self) -> impl Iterator<Item = &RequestingPlan> {
        self.requesting.values()
    }

    pub fn generate(
        &mut self,
        id: &PlanId,
        parts: &PartsBook,
        lead_time_days: Option<i64>,
        requester: &OrgId,
        today: NaiveDate,
    ) -> Result<Generated, FlowError> {
        let plan = self
            .plans
            .get(id)
            .ok_or_else(|| FlowError::UnknownPlan(id.clone()))?;
        let generated = generate_requesting_plan(
            plan,
            parts,
            lead_time_days.unwrap_or(self.lead_time_days),
            requester,
            today,
            self.requesting.get(id),
            &mut self.alerts,
            &mut self.polls,
        )?;
        self.requesting.insert(id.clone(), generated.plan.clone());
        Ok(generated)
    }

    /// Advances every requesting plan to `now`. Running it again for the same
    /// day with no change on the hub produces no actions.
    pub fn tick(&mut self, now: NaiveDate, port: &mut dyn FlowPort) -> Vec<FlowAction> {
        let at = midnight(now);
        let mut actions = Vec::new();
        for (plan_id, rplan) in self.requesting.iter_mut() {
            for entry in rplan.entries.iter_mut() {
                step_entry(
                    plan_id,
                    &rplan.ship,
                    &rplan.requester,
                    entry,
                    now,
                    at,
                    port,
                    &mut self.polls,
                    &mut self.alerts,
                    &mut actions,
                );
            }
        }
        actions
    }
}

#[allow(clippy::too_many_arguments)]
fn step_entry(
    plan: &PlanId,
    ship: &ShipId,
    requester: &OrgId,
    entry: &mut Entry,
    now: NaiveDate,
    at: DateTime<Utc>,
    port: &mut dyn FlowPort,
    polls: &mut PollLog,
    alerts: &mut Alerts,
    actions: &mut Vec<FlowAction>,
) {
    if entry.status == EntryStatus::Delivered || entry.request_at > now {
        return;
    }
    if entry.last_checked.is_some_and(|d| d >= now) {
        return;
    }
    entry.last_checked = Some(now);
    let doc = entry.doc();
    let subject = entry.subject(plan);

    let move_to = |entry: &mut Entry, to: EntryStatus, actions: &mut Vec<FlowAction>| {
        debug_assert!(entry.status.can_become(to));
        actions.push(FlowAction::StatusChanged {
            plan: plan.clone(),
            part: entry.part.clone(),
            doc_kind: entry.doc_kind.clone(),
            from: entry.status,
            to,
        });
        entry.status = to;
    };

    // A first look at a task entry is an automatic implicit poll: pull the
    // document if someone already shared it. Afterwards the hub is only
    // watched for the outstanding request to be fulfilled.
    let first_look = entry.status == EntryStatus::Pending && entry.origin == EntryOrigin::Task;
    if first_look {
        let poll = polls.record(
            PollTarget::Document { doc: doc.clone() },
            PollMode::Automatic,
            Visibility::Implicit,
            requester,
            at,
        );
        actions.push(FlowAction::Polled {
            poll,
            addressee: None,
        });
    }

    match port.satisfy(ship, requester, &doc) {
        Availability::Delivered { version } => {
            entry.delivered_version = Some(version);
            move_to(entry, EntryStatus::Delivered, actions);
            for id in alerts.resolve(&subject, at) {
                actions.push(FlowAction::AlertResolved { alert: id });
            }
            return;
        }
        Availability::Absent => {
            if first_look {
                let poll = polls.record(
                    PollTarget::Document { doc: doc.clone() },
                    PollMode::Automatic,
                    Visibility::Explicit,
                    requester,
                    at,
                );
                actions.push(FlowAction::Polled {
                    poll,
                    addressee: Some(entry.part.supplier_id.clone()),
                });
                move_to(entry, EntryStatus::Requested, actions);
            }
        }
        Availability::Unreadable => {
            actions.extend(
                alerts
                    .raise(
                        subject.clone(),
                        Severity::Problem,
                        format!(
                            "{requester} cannot read {} for {}; an administrator must grant read access at {}",
                            entry.doc_kind,
                            entry.part,
                            entry.part.path()
                        ),
                        at,
                    )
                    .map(|alert| FlowAction::AlertRaised { alert }),
            );
        }
        Availability::Failed { reason } => {
            actions.extend(
                alerts
                    .raise(
                        subject.clone(),
                        Severity::Problem,
                        format!("pulling {} for {} failed: {reason}", entry.doc_kind, entry.part),
                        at,
                    )
                    .map(|alert| FlowAction::AlertRaised { alert }),
            );
        }
    }

    if entry.need_by <= now && entry.status != EntryStatus::Late {
        move_to(entry, EntryStatus::Late, actions);
        actions.extend(
            alerts
                .raise(
                    subject,
                    Severity::Problem,
                    format!(
                        "{} for {} was needed by {} and has not arrived",
                        entry.doc_kind, entry.part, entry.need_by
                    ),
                    at,
                )
                .map(|alert| FlowAction::AlertRaised { alert }),
        );
    }
}
