//! Wire types shared by the service and the client.
//!
//! Bodies are JSON. Every mutating request is wrapped in an [`Envelope`]
//! naming the acting organization and an idempotency key. Read requests name
//! the actor in the `actor` query parameter.

use std::collections::BTreeSet;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use paperstack::access::Level;
use paperstack::flow::ProjectPlan;
use paperstack::hub::{Clock, ErrorKind};
use paperstack::ids::{DesignId, DraftId, OrgId, ShipId, ShipTypeId};
use paperstack::partner::{Event, Subject};
use paperstack::parts::{Attribute, DraftSpec};
use paperstack::sfi::SfiPath;
use paperstack::ship::TemplatePart;
use paperstack::store::DocumentId;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Envelope<T> {
    pub actor: OrgId,
    pub idempotency_key: String,
    pub request: T,
}

/// Body of every non-2xx response.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: ErrorDetail,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorDetail {
    pub kind: ErrorKind,
    pub message: String,
    /// Field path of a validation error, e.g. `request.doc.part.sfi`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Health {
    pub status: String,
    pub project: String,
    pub journal_len: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClockInfo {
    pub clock: Clock,
    pub today: NaiveDate,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NewShipType {
    #[serde(default)]
    pub id: Option<ShipTypeId>,
    pub name: String,
    #[serde(default)]
    pub parts: Vec<TemplatePart>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NewShip {
    #[serde(default)]
    pub id: Option<ShipId>,
    pub name: String,
    #[serde(default)]
    pub ship_type: Option<ShipTypeId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NewDesign {
    #[serde(default)]
    pub id: Option<DesignId>,
    pub ship: ShipId,
    pub title: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NewDraft {
    #[serde(default)]
    pub id: Option<DraftId>,
    pub ship: ShipId,
    #[serde(default)]
    pub design: Option<DesignId>,
    #[serde(default)]
    pub sfi: Option<String>,
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default)]
    pub supplier_id: Option<String>,
    #[serde(default)]
    pub required_doc_kinds: Option<BTreeSet<String>>,
}

impl NewDraft {
    pub fn spec(&self) -> DraftSpec {
        DraftSpec {
            sfi: self.sfi.clone(),
            name: self.name.clone(),
            supplier_id: self.supplier_id.clone(),
            required_doc_kinds: self.required_doc_kinds.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttachDraft {
    pub draft: DraftId,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConcretizeDraft {
    pub attribute: Attribute,
    pub value: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SupersedeDraft {
    #[serde(default)]
    pub new_id: Option<DraftId>,
    #[serde(default)]
    pub corrections: Vec<(Attribute, String)>,
}

/// A document upload; `content` is base64.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PushDocument {
    pub doc: DocumentId,
    #[serde(default)]
    pub format_tag: String,
    pub content: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeprecateVersion {
    pub doc: DocumentId,
    pub version: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GrantChange {
    pub principal: OrgId,
    pub scope: SfiPath,
    pub level: Level,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GrantCheck {
    pub org: OrgId,
    pub location: SfiPath,
    pub level: Level,
    pub allowed: bool,
}

/// A project plan, either structured or in its record format.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PlanImport {
    Plan { plan: ProjectPlan },
    Records { records: String },
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneratePlan {
    #[serde(default)]
    pub lead_time_days: Option<i64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SendRequest {
    pub subject: Subject,
    pub body: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PostMessage {
    pub body: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdvanceClock {
    pub to: NaiveDate,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventPage {
    pub events: Vec<Event>,
    /// Cursor for the next `since`.
    pub last_id: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Method {
    Get,
    Post,
}

/// One HTTP endpoint and the CLI subcommand that drives it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Endpoint {
    pub method: Method,
    pub path: &'static str,
    pub subcommand: &'static str,
}

const fn get(path: &'static str, subcommand: &'static str) -> Endpoint {
    Endpoint {
        method: Method::Get,
        path,
        subcommand,
    }
}

const fn post(path: &'static str, subcommand: &'static str) -> Endpoint {
    Endpoint {
        method: Method::Post,
        path,
        subcommand,
    }
}

pub const ENDPOINTS: &[Endpoint] = &[
    get("/health", "health"),
    get("/ship-types", "ship-type list"),
    post("/ship-types", "ship-type register"),
    get("/ships", "ship list"),
    post("/ships", "ship create"),
    get("/ships/{id}", "ship show"),
    get("/ships/{id}/parts-list", "part list"),
    post("/designs", "design create"),
    post("/designs/{id}/drafts", "design attach"),
    post("/drafts", "part draft"),
    post("/drafts/{id}/concretize", "part concretize"),
    post("/drafts/{id}/supersede", "part supersede"),
    post("/sync/diff", "sync pull"),
    get("/blobs/{hash}", "sync pull"),
    post("/sync/push", "sync push"),
    get("/documents/versions", "doc versions"),
    post("/documents/deprecate", "doc deprecate"),
    post("/grants", "grant add"),
    post("/grants/revoke", "grant revoke"),
    get("/grants/check", "grant check"),
    post("/plans", "plan import"),
    get("/plans/{id}", "plan export"),
    post("/plans/{id}/generate", "plan generate"),
    get("/plans/{id}/requesting", "plan show"),
    get("/alerts", "alert list"),
    get("/polls", "poll list"),
    post("/requests", "request send"),
    get("/threads/{id}", "thread show"),
    post("/threads/{id}/messages", "thread post"),
    get("/events", "events tail"),
    get("/clock", "clock show"),
    post("/clock/advance", "clock advance"),
];
