//! Scripted multi-actor runs against an in-memory hub.
//!
//! A scenario is a TOML file: an optional `[project]` table and a list of
//! `[[step]]` tables. Each step names an `actor` and an `op`. Ops are the hub
//! commands (same field names as on the wire) plus two extras:
//!
//! * `push`: upload `content` as the next version of `doc`;
//! * `expect`: assert counts on the current state.
//!
//! `import_plan` also accepts the plan as record text under `records`. Any
//! step may carry `fails = "<kind>"` to assert that it is refused.

use std::collections::BTreeMap;
use std::fmt;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{Clock, Command, Genesis, Hub, ProjectState, Reply};
use crate::flow::{EntryStatus, PollClass, ProjectPlan, Severity};
use crate::ids::{OrgId, PlanId};
use crate::partner::EventPayload;
use crate::store::DocumentId;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("scenario does not parse: {0}")]
    Parse(String),
    #[error("step {step} ({op}) failed: {error}\n{transcript}")]
    Step {
        step: usize,
        op: String,
        error: String,
        transcript: Transcript,
    },
    #[error("step {step} assertions failed: {}\n{transcript}", failures.join("; "))]
    Assertion {
        step: usize,
        failures: Vec<String>,
        transcript: Transcript,
    },
}

impl ScenarioError {
    pub fn transcript(&self) -> Option<&Transcript> {
        match self {
            ScenarioError::Parse(_) => None,
            ScenarioError::Step { transcript, .. } | ScenarioError::Assertion { transcript, .. } => {
                Some(transcript)
            }
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default)]
struct ProjectHeader {
    name: String,
    owner: OrgId,
    start: NaiveDate,
    lead_time_days: i64,
}

impl Default for ProjectHeader {
    fn default() -> Self {
        Self {
            name: "scenario".into(),
            owner: OrgId::new("YARD"),
            start: NaiveDate::from_ymd_opt(2026, 1, 1).expect("valid date"),
            lead_time_days: crate::flow::DEFAULT_LEAD_TIME_DAYS,
        }
    }
}

#[derive(Debug, Deserialize)]
struct Script {
    #[serde(default)]
    project: ProjectHeader,
    #[serde(default)]
    step: Vec<toml::Table>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PushStep {
    doc: DocumentId,
    content: String,
    #[serde(default)]
    format_tag: String,
}

/// Counts to check. Plan counts need `plan`.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct Expect {
    plan: Option<PlanId>,
    entries: Option<usize>,
    pending: Option<usize>,
    requested: Option<usize>,
    delivered: Option<usize>,
    late: Option<usize>,
    /// Problem alerts ever raised.
    problem_alerts: Option<usize>,
    warning_alerts: Option<usize>,
    open_alerts: Option<usize>,
    events: Option<usize>,
    #[serde(default)]
    polls: BTreeMap<String, usize>,
    each_action_logged_once: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TranscriptEntry {
    pub step: usize,
    pub actor: OrgId,
    pub op: String,
    pub outcome: String,
    pub events: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Transcript {
    pub entries: Vec<TranscriptEntry>,
}

impl Transcript {
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }
}

impl fmt::Display for Transcript {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for e in &self.entries {
            writeln!(f, "#{} {} {}: {}", e.step, e.actor, e.op, e.outcome)?;
            for ev in &e.events {
                writeln!(f, "    {ev}")?;
            }
        }
        Ok(())
    }
}

pub struct ScenarioRun {
    pub transcript: Transcript,
    pub hub: Hub,
}

impl fmt::Debug for ScenarioRun {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScenarioRun")
            .field("steps", &self.transcript.len())
            .field("digest", &self.hub.digest())
            .finish()
    }
}

pub fn run_scenario(text: &str) -> Result<ScenarioRun, ScenarioError> {
    let script: Script = toml::from_str(text).map_err(|e| ScenarioError::Parse(e.to_string()))?;
    let header = script.project;
    let mut hub = Hub::in_memory(Genesis {
        project: header.name,
        owner: header.owner.clone(),
        clock: Clock::Simulated {
            today: header.start,
        },
        lead_time_days: header.lead_time_days,
    });
    let mut transcript = Transcript::default();

    for (i, mut table) in script.step.into_iter().enumerate() {
        let step = i + 1;
        let parse_err = |what: String| ScenarioError::Parse(format!("step {step}: {what}"));
        let actor = match table.remove("actor") {
            Some(toml::Value::String(s)) => OrgId::new(s),
            Some(_) => return Err(parse_err("actor must be a string".into())),
            None => header.owner.clone(),
        };
        let key = match table.remove("key") {
            Some(toml::Value::String(s)) => Some(s),
            Some(_) => return Err(parse_err("key must be a string".into())),
            None => None,
        };
        let fails = match table.remove("fails") {
            Some(toml::Value::String(s)) => Some(s),
            Some(_) => return Err(parse_err("fails must be a string".into())),
            None => None,
        };
        let op = match table.get("op") {
            Some(toml::Value::String(s)) => s.clone(),
            _ => return Err(parse_err("missing op".into())),
        };
        let before = hub.state().events.last_id();

        let result: Result<String, String> = match op.as_str() {
            "expect" => {
                table.remove("op");
                let expect: Expect = toml::Value::Table(table)
                    .try_into()
                    .map_err(|e| parse_err(e.to_string()))?;
                let failures = check(&hub.state(), &expect);
                if !failures.is_empty() {
                    transcript.entries.push(TranscriptEntry {
                        step,
                        actor,
                        op,
                        outcome: format!("FAILED {}", failures.join("; ")),
                        events: vec![],
                    });
                    return Err(ScenarioError::Assertion {
                        step,
                        failures,
                        transcript,
                    });
                }
                Ok("assertions hold".into())
            }
            "push" => {
                table.remove("op");
                let push: PushStep = toml::Value::Table(table)
                    .try_into()
                    .map_err(|e| parse_err(e.to_string()))?;
                hub.push(
                    &actor,
                    key.as_deref(),
                    &push.doc,
                    push.content.as_bytes(),
                    &push.format_tag,
                )
                .map(|r| summarize(&r))
                .map_err(|e| format!("{:?}: {e}", e.kind()))
            }
            _ => {
                if op == "import_plan" {
                    if let Some(toml::Value::String(records)) = table.remove("records") {
                        let plan = ProjectPlan::from_records(&records)
                            .map_err(|e| parse_err(e.to_string()))?;
                        table.insert("plan".into(), toml::Value::try_from(plan).expect("plans serialize"));
                    }
                }
                let command: Command = toml::Value::Table(table)
                    .try_into()
                    .map_err(|e| parse_err(e.to_string()))?;
                hub.submit(&actor, key.as_deref(), command)
                    .map(|r| summarize(&r))
                    .map_err(|e| format!("{:?}: {e}", e.kind()))
            }
        };

        let state = hub.state();
        let events: Vec<String> = state
            .events
            .all()
            .iter()
            .filter(|e| e.id > before)
            .map(|e| {
                let audience: Vec<&str> = e.audience.iter().map(OrgId::as_str).collect();
                format!("event {} {:?} to [{}]", e.id, e.kind, audience.join(","))
            })
            .collect();
        let outcome = match (&result, &fails) {
            (Ok(summary), None) => summary.clone(),
            (Err(error), Some(kind)) if error.to_lowercase().starts_with(&kind.to_lowercase().replace('_', "")) => {
                format!("refused as expected ({error})")
            }
            (Err(error), None) => {
                transcript.entries.push(TranscriptEntry {
                    step,
                    actor,
                    op: op.clone(),
                    outcome: format!("ERROR {error}"),
                    events,
                });
                return Err(ScenarioError::Step {
                    step,
                    op,
                    error: error.clone(),
                    transcript,
                });
            }
            (Ok(summary), Some(kind)) => {
                let error = format!("expected a {kind} refusal, got {summary}");
                return Err(ScenarioError::Step {
                    step,
                    op,
                    error,
                    transcript,
                });
            }
            (Err(error), Some(kind)) => {
                let error = format!("expected a {kind} refusal, got {error}");
                return Err(ScenarioError::Step {
                    step,
                    op,
                    error,
                    transcript,
                });
            }
        };
        transcript.entries.push(TranscriptEntry {
            step,
            actor,
            op,
            outcome,
            events,
        });
    }
    Ok(ScenarioRun { transcript, hub })
}

fn summarize(reply: &Reply) -> String {
    match reply {
        Reply::Initialized { project } => format!("project {project}"),
        Reply::ShipType { id, name, parts } => format!("ship type {id} {name:?} with {parts} parts"),
        Reply::Ship { id, notes, .. } => format!("ship {id}, {} inheritance notes", notes.len()),
        Reply::Design { design } => format!("design {}", design.id),
        Reply::Draft { draft, alert } => {
            let state = if draft.is_identifiable() {
                "identifiable"
            } else {
                "incomplete"
            };
            match alert {
                Some(a) => format!("draft {} {state}, alert {}", draft.id, a.id),
                None => format!("draft {} {state}", draft.id),
            }
        }
        Reply::Attached { design, draft } => format!("{draft} attached to {design}"),
        Reply::Uploaded {
            doc,
            version,
            created,
        } => {
            if *created {
                format!("{doc} v{}", version.version)
            } else {
                format!("{doc} already current at v{}", version.version)
            }
        }
        Reply::Deprecated { doc, version } => format!("{doc} v{} deprecated", version.version),
        Reply::GrantChanged { changed } => {
            if *changed {
                "grants changed".into()
            } else {
                "grants unchanged".into()
            }
        }
        Reply::PlanImported { plan, tasks } => format!("plan {plan} with {tasks} tasks"),
        Reply::PlanGenerated { plan, alerts } => format!(
            "requesting plan {} with {} entries, {} alerts",
            plan.plan,
            plan.entries.len(),
            alerts.len()
        ),
        Reply::Requested { request } => format!(
            "request poll {} in {}",
            request.poll.id, request.thread.id
        ),
        Reply::Thread { thread } => format!("{} has {} messages", thread.id, thread.messages.len()),
        Reply::Ticked { today, actions } => format!("ticked {today}, {} actions", actions.len()),
    }
}

fn check(state: &ProjectState, expect: &Expect) -> Vec<String> {
    let mut failures = Vec::new();
    let compare = |what: &str, expected: Option<usize>, actual: usize| match expected {
        Some(expected) if expected != actual => {
            Some(format!("{what}: expected {expected}, found {actual}"))
        }
        _ => None,
    };
    if let Some(plan) = &expect.plan {
        match state.flow.requesting(plan) {
            Ok(rp) => {
                failures.extend(compare("entries", expect.entries, rp.entries.len()));
                failures.extend(compare("pending", expect.pending, rp.count(EntryStatus::Pending)));
                failures.extend(compare("requested", expect.requested, rp.count(EntryStatus::Requested)));
                failures.extend(compare("delivered", expect.delivered, rp.count(EntryStatus::Delivered)));
                failures.extend(compare("late", expect.late, rp.count(EntryStatus::Late)));
            }
            Err(e) => failures.push(e.to_string()),
        }
    }
    let alerts = state.flow.alerts.all();
    let count = |sev: Severity| alerts.iter().filter(|a| a.severity == sev).count();
    failures.extend(compare("problem alerts", expect.problem_alerts, count(Severity::Problem)));
    failures.extend(compare("warning alerts", expect.warning_alerts, count(Severity::Warning)));
    failures.extend(compare("open alerts", expect.open_alerts, state.flow.alerts.open().count()));
    failures.extend(compare("events", expect.events, state.events.len()));
    for (class, expected) in &expect.polls {
        let parsed: Result<PollClass, _> =
            serde_json::from_value(serde_json::Value::String(class.to_lowercase()));
        match parsed {
            Ok(c) => {
                let n = state
                    .flow
                    .polls
                    .records()
                    .iter()
                    .filter(|p| p.classification == c)
                    .count();
                failures.extend(compare(&format!("{class} polls"), Some(*expected), n));
            }
            Err(_) => failures.push(format!("unknown poll class {class:?}")),
        }
    }
    if expect.each_action_logged_once == Some(true) {
        if let Err(e) = actions_logged_once(state) {
            failures.push(e);
        }
    }
    failures
}

/// Every poll and every alert appears in exactly one event.
pub fn actions_logged_once(state: &ProjectState) -> Result<(), String> {
    let mut polls: BTreeMap<u64, usize> = BTreeMap::new();
    let mut alerts: BTreeMap<u64, usize> = BTreeMap::new();
    for e in state.events.all() {
        match &e.payload {
            EventPayload::RequestIssued { poll, .. } => *polls.entry(poll.id).or_default() += 1,
            EventPayload::AlertRaised { alert } => *alerts.entry(alert.id).or_default() += 1,
            _ => {}
        }
        debug_assert_eq!(e.kind, e.payload.kind());
    }
    for p in state.flow.polls.records() {
        let n = polls.remove(&p.id).unwrap_or(0);
        if n != 1 {
            return Err(format!("poll {} appears in {n} events", p.id));
        }
    }
    for a in state.flow.alerts.all() {
        let n = alerts.remove(&a.id).unwrap_or(0);
        if n != 1 {
            return Err(format!("alert {} appears in {n} events", a.id));
        }
    }
    if let Some(id) = polls.keys().chain(alerts.keys()).next() {
        return Err(format!("event refers to unknown poll or alert {id}"));
    }
    Ok(())
}
