//! Blocking HTTP client for the hub, one method per endpoint.

use std::time::Duration;

use base64::Engine;
use chrono::NaiveDate;
use reqwest::blocking::{RequestBuilder, Response};
use serde::de::DeserializeOwned;
use serde::Serialize;
use thiserror::Error;

use paperstack::access::Level;
use paperstack::flow::{Alert, PollRecord, ProjectPlan, RequestingPlan};
use paperstack::hub::{ErrorKind, Reply, ShipSummary, ShipTypeSummary};
use paperstack::ids::{DesignId, DraftId, OrgId, PlanId, ShipId, ThreadId};
use paperstack::partner::{Subject, Thread};
use paperstack::parts::PartsListEntry;
use paperstack::sfi::SfiPath;
use paperstack::store::{ContentHash, DocumentId, DocumentVersion};
use paperstack::sync::{ChangeSet, HubPort, PushAck, ReplicaSummary, SyncError};

use crate::api::*;

#[derive(Debug, Error)]
pub enum ClientError {
    /// The hub could not be reached or answered garbage.
    #[error("transport: {0}")]
    Transport(String),
    /// The hub refused the request.
    #[error("{} ({status}): {}", body.error.kind_name(), body.error.message)]
    Api { status: u16, body: ErrorBody },
}

impl ErrorDetail {
    pub fn kind_name(&self) -> &'static str {
        match self.kind {
            ErrorKind::Forbidden => "forbidden",
            ErrorKind::NotFound => "not_found",
            ErrorKind::Conflict => "conflict",
            ErrorKind::Invalid => "invalid",
            ErrorKind::Internal => "internal",
        }
    }
}

impl ClientError {
    pub fn kind(&self) -> Option<ErrorKind> {
        match self {
            ClientError::Transport(_) => None,
            ClientError::Api { body, .. } => Some(body.error.kind),
        }
    }
}

impl From<reqwest::Error> for ClientError {
    fn from(e: reqwest::Error) -> Self {
        ClientError::Transport(e.to_string())
    }
}

type Result<T> = std::result::Result<T, ClientError>;

#[derive(Debug, Clone)]
pub struct Client {
    base: String,
    actor: OrgId,
    key: Option<String>,
    http: reqwest::blocking::Client,
}

impl Client {
    pub fn new(base: impl Into<String>, actor: impl Into<OrgId>) -> Self {
        let http = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(60))
            .build()
            .expect("http client without TLS always builds");
        Self {
            base: base.into().trim_end_matches('/').to_owned(),
            actor: actor.into(),
            key: None,
            http,
        }
    }

    pub fn actor(&self) -> &OrgId {
        &self.actor
    }

    pub fn as_actor(&self, actor: impl Into<OrgId>) -> Self {
        Self {
            actor: actor.into(),
            ..self.clone()
        }
    }

    /// Uses `key` as the idempotency key of every mutation, so a retried
    /// invocation is recognized. Without it each call gets a fresh key.
    pub fn with_key(mut self, key: impl Into<String>) -> Self {
        self.key = Some(key.into());
        self
    }

    fn url(&self, path: &str) -> String {
        format!("{}{path}", self.base)
    }

    fn send(&self, req: RequestBuilder) -> Result<Response> {
        let resp = req.send()?;
        let status = resp.status();
        if status.is_success() {
            return Ok(resp);
        }
        let text = resp.text()?;
        match serde_json::from_str::<ErrorBody>(&text) {
            Ok(body) => Err(ClientError::Api {
                status: status.as_u16(),
                body,
            }),
            Err(_) => Err(ClientError::Transport(format!("{status}: {text}"))),
        }
    }

    fn json<T: DeserializeOwned>(resp: Response) -> Result<T> {
        let text = resp.text()?;
        serde_json::from_str(&text).map_err(|e| ClientError::Transport(format!("bad reply: {e}")))
    }

    fn get_resp(&self, path: &str, params: &[(&str, String)]) -> Result<Response> {
        let mut query = vec![("actor", self.actor.to_string())];
        query.extend(params.iter().map(|(k, v)| (*k, v.clone())));
        self.send(self.http.get(self.url(path)).query(&query))
    }

    fn get<T: DeserializeOwned>(&self, path: &str, params: &[(&str, String)]) -> Result<T> {
        Self::json(self.get_resp(path, params)?)
    }

    fn get_text(&self, path: &str, params: &[(&str, String)]) -> Result<String> {
        Ok(self.get_resp(path, params)?.text()?)
    }

    fn post<B: Serialize, T: DeserializeOwned>(&self, path: &str, request: B) -> Result<T> {
        let envelope = Envelope {
            actor: self.actor.clone(),
            idempotency_key: self
                .key
                .clone()
                .unwrap_or_else(|| uuid::Uuid::new_v4().to_string()),
            request,
        };
        Self::json(self.send(self.http.post(self.url(path)).json(&envelope))?)
    }

    pub fn health(&self) -> Result<Health> {
        self.get("/health", &[])
    }

    pub fn ship_types(&self) -> Result<Vec<ShipTypeSummary>> {
        self.get("/ship-types", &[])
    }

    pub fn register_ship_type(&self, req: &NewShipType) -> Result<Reply> {
        self.post("/ship-types", req)
    }

    pub fn ships(&self) -> Result<Vec<ShipSummary>> {
        self.get("/ships", &[])
    }

    pub fn create_ship(&self, req: &NewShip) -> Result<Reply> {
        self.post("/ships", req)
    }

    pub fn ship(&self, id: &ShipId) -> Result<ShipSummary> {
        self.get(&format!("/ships/{id}"), &[])
    }

    pub fn parts_list(&self, ship: &ShipId) -> Result<Vec<PartsListEntry>> {
        self.get(&format!("/ships/{ship}/parts-list"), &[])
    }

    pub fn parts_list_csv(&self, ship: &ShipId) -> Result<String> {
        self.get_text(&format!("/ships/{ship}/parts-list"), &[("format", "csv".into())])
    }

    pub fn create_design(&self, req: &NewDesign) -> Result<Reply> {
        self.post("/designs", req)
    }

    pub fn attach(&self, design: &DesignId, draft: &DraftId) -> Result<Reply> {
        self.post(
            &format!("/designs/{design}/drafts"),
            AttachDraft {
                draft: draft.clone(),
            },
        )
    }

    pub fn create_draft(&self, req: &NewDraft) -> Result<Reply> {
        self.post("/drafts", req)
    }

    pub fn concretize(&self, draft: &DraftId, req: &ConcretizeDraft) -> Result<Reply> {
        self.post(&format!("/drafts/{draft}/concretize"), req)
    }

    pub fn supersede(&self, draft: &DraftId, req: &SupersedeDraft) -> Result<Reply> {
        self.post(&format!("/drafts/{draft}/supersede"), req)
    }

    pub fn diff(&self, summary: &ReplicaSummary) -> Result<ChangeSet> {
        let body = serde_json::json!({ "actor": self.actor, "summary": summary });
        Self::json(self.send(self.http.post(self.url("/sync/diff")).json(&body))?)
    }

    pub fn blob(&self, hash: &ContentHash) -> Result<Vec<u8>> {
        Ok(self.get_resp(&format!("/blobs/{hash}"), &[])?.bytes()?.to_vec())
    }

    pub fn push(&self, doc: &DocumentId, bytes: &[u8], format_tag: &str) -> Result<Reply> {
        self.post(
            "/sync/push",
            PushDocument {
                doc: doc.clone(),
                format_tag: format_tag.to_owned(),
                content: base64::engine::general_purpose::STANDARD.encode(bytes),
            },
        )
    }

    pub fn versions(&self, doc: &DocumentId) -> Result<Vec<DocumentVersion>> {
        let part = &doc.part;
        self.get(
            "/documents/versions",
            &[
                ("sfi", part.sfi.to_string()),
                ("name", part.name.clone()),
                ("supplier", part.supplier_id.to_string()),
                ("doc_name", doc.doc_name.clone()),
            ],
        )
    }

    pub fn deprecate(&self, doc: &DocumentId, version: u32) -> Result<Reply> {
        self.post(
            "/documents/deprecate",
            DeprecateVersion {
                doc: doc.clone(),
                version,
            },
        )
    }

    pub fn grant(&self, change: &GrantChange) -> Result<Reply> {
        self.post("/grants", change)
    }

    pub fn revoke(&self, change: &GrantChange) -> Result<Reply> {
        self.post("/grants/revoke", change)
    }

    pub fn check(&self, org: &OrgId, location: &SfiPath, level: Level) -> Result<GrantCheck> {
        self.get(
            "/grants/check",
            &[
                ("org", org.to_string()),
                ("loc", location.to_string()),
                ("level", level.to_string()),
            ],
        )
    }

    pub fn import_plan(&self, plan: &ProjectPlan) -> Result<Reply> {
        self.post("/plans", PlanImport::Plan { plan: plan.clone() })
    }

    pub fn import_records(&self, records: &str) -> Result<Reply> {
        self.post(
            "/plans",
            PlanImport::Records {
                records: records.to_owned(),
            },
        )
    }

    pub fn export_plan(&self, plan: &PlanId) -> Result<ProjectPlan> {
        self.get(&format!("/plans/{plan}"), &[])
    }

    pub fn export_records(&self, plan: &PlanId) -> Result<String> {
        self.get_text(&format!("/plans/{plan}"), &[("format", "records".into())])
    }

    pub fn generate(&self, plan: &PlanId, lead_time_days: Option<i64>) -> Result<Reply> {
        self.post(
            &format!("/plans/{plan}/generate"),
            GeneratePlan { lead_time_days },
        )
    }

    pub fn requesting(&self, plan: &PlanId) -> Result<RequestingPlan> {
        self.get(&format!("/plans/{plan}/requesting"), &[])
    }

    pub fn requesting_csv(&self, plan: &PlanId) -> Result<String> {
        self.get_text(&format!("/plans/{plan}/requesting"), &[("format", "csv".into())])
    }

    pub fn alerts(&self) -> Result<Vec<Alert>> {
        self.get("/alerts", &[])
    }

    pub fn polls(&self) -> Result<Vec<PollRecord>> {
        self.get("/polls", &[])
    }

    pub fn send_request(&self, subject: &Subject, body: &str) -> Result<Reply> {
        self.post(
            "/requests",
            SendRequest {
                subject: subject.clone(),
                body: body.to_owned(),
            },
        )
    }

    pub fn thread(&self, id: &ThreadId) -> Result<Thread> {
        self.get(&format!("/threads/{id}"), &[])
    }

    pub fn post_message(&self, thread: &ThreadId, body: &str) -> Result<Reply> {
        self.post(
            &format!("/threads/{thread}/messages"),
            PostMessage {
                body: body.to_owned(),
            },
        )
    }

    /// Events after `since`, waiting up to `wait` for the first one.
    pub fn events(&self, since: u64, wait: Duration) -> Result<EventPage> {
        self.get(
            "/events",
            &[
                ("since", since.to_string()),
                ("wait_ms", wait.as_millis().to_string()),
            ],
        )
    }

    pub fn clock(&self) -> Result<ClockInfo> {
        self.get("/clock", &[])
    }

    pub fn advance_clock(&self, to: NaiveDate) -> Result<Reply> {
        self.post("/clock/advance", AdvanceClock { to })
    }
}

fn remote(e: ClientError) -> SyncError {
    SyncError::Remote(e.to_string())
}

impl HubPort for Client {
    fn diff(&mut self, summary: &ReplicaSummary) -> std::result::Result<ChangeSet, SyncError> {
        Client::diff(self, summary).map_err(remote)
    }

    fn fetch_blob(&mut self, hash: &ContentHash) -> std::result::Result<Vec<u8>, SyncError> {
        self.blob(hash).map_err(remote)
    }

    fn push(
        &mut self,
        doc: &DocumentId,
        bytes: &[u8],
        format_tag: &str,
    ) -> std::result::Result<PushAck, SyncError> {
        match Client::push(self, doc, bytes, format_tag).map_err(remote)? {
            Reply::Uploaded {
                doc,
                version,
                created,
            } => Ok(PushAck {
                doc,
                version: version.version,
                content_hash: version.content_hash,
                created,
            }),
            other => Err(SyncError::Remote(format!("unexpected reply {other:?}"))),
        }
    }
}
