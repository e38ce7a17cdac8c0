//! The `paperstack` command line.
//!
//! Exit codes: 0 success, 1 the hub (or a check) said no, 2 usage error,
//! 3 the hub could not be reached. Errors go to stderr as a JSON
//! [`ErrorBody`](crate::api::ErrorBody).

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Duration;

use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use thiserror::Error;

use paperstack::access::Level;
use paperstack::flow::ProjectPlan;
use paperstack::hub::scenario::run_scenario;
use paperstack::hub::{Clock, ErrorKind, Genesis, Hub, Reply};
use paperstack::ids::{DesignId, DraftId, OrgId, PlanId, ShipId, ShipTypeId, ThreadId};
use paperstack::partner::Subject;
use paperstack::parts::{parts_list_csv, Attribute};
use paperstack::sfi::{PartIdentity, SfiPath};
use paperstack::ship::TemplatePart;
use paperstack::store::{DirBlobs, DocumentId};
use paperstack::sync::{pull, push, Replica};

use crate::api::*;
use crate::client::{Client, ClientError};
use crate::config::{self, ClockMode, ConfigFile, OutputMode};

#[derive(Debug, Parser)]
#[command(name = "paperstack", version, about = "Paperstack documentation hub")]
pub struct Cli {
    /// Configuration file (default: ./paperstack.toml if present).
    #[arg(long, global = true, env = "PAPERSTACK_CONFIG")]
    config: Option<PathBuf>,
    /// Hub base URL.
    #[arg(long, global = true, env = "PAPERSTACK_HUB")]
    hub: Option<String>,
    /// Acting organization.
    #[arg(long, global = true, env = "PAPERSTACK_ACTOR")]
    actor: Option<String>,
    #[arg(long, global = true, value_enum, env = "PAPERSTACK_OUTPUT")]
    output: Option<OutputMode>,
    /// Idempotency key for the mutation; reuse it when retrying.
    #[arg(long, global = true)]
    key: Option<String>,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Run the hub service.
    Serve(ServeArgs),
    /// Service liveness and journal length.
    Health,
    /// Ship types and their part templates.
    #[command(subcommand, name = "ship-type")]
    ShipType(ShipTypeCmd),
    /// Ships and their SFI trees.
    #[command(subcommand)]
    Ship(ShipCmd),
    /// Designs grouping part drafts.
    #[command(subcommand)]
    Design(DesignCmd),
    /// Part drafts and the parts list.
    #[command(subcommand)]
    Part(PartCmd),
    /// Document versions.
    #[command(subcommand)]
    Doc(DocCmd),
    /// Local replica pull and document push.
    #[command(subcommand)]
    Sync(SyncCmd),
    /// Access grants.
    #[command(subcommand)]
    Grant(GrantCmd),
    /// Project plans and requesting plans.
    #[command(subcommand)]
    Plan(PlanCmd),
    /// Scheduler alerts.
    #[command(subcommand)]
    Alert(AlertCmd),
    /// Recorded polls.
    #[command(subcommand)]
    Poll(PollCmd),
    /// Explicit document requests.
    #[command(subcommand)]
    Request(RequestCmd),
    /// Request threads.
    #[command(subcommand)]
    Thread(ThreadCmd),
    /// Event feed.
    #[command(subcommand)]
    Events(EventsCmd),
    /// Project clock.
    #[command(subcommand)]
    Clock(ClockCmd),
    /// Scripted scenarios against an in-memory hub.
    #[command(subcommand)]
    Scenario(ScenarioCmd),
}

#[derive(Debug, Args)]
struct ServeArgs {
    /// Address to bind, e.g. 127.0.0.1:7878.
    #[arg(long, env = "PAPERSTACK_LISTEN")]
    listen: Option<String>,
    /// Directory holding the journal, snapshot and blobs.
    #[arg(long, env = "PAPERSTACK_DATA_DIR")]
    data_dir: Option<PathBuf>,
    #[arg(long, value_enum)]
    clock: Option<ClockMode>,
    /// First day of a simulated clock.
    #[arg(long)]
    start: Option<NaiveDate>,
    /// Organization holding Admin at the root of a new project.
    #[arg(long)]
    owner: Option<String>,
    #[arg(long)]
    project: Option<String>,
    #[arg(long, env = "PAPERSTACK_LEAD_TIME_DAYS")]
    lead_time_days: Option<i64>,
    /// Seconds between scheduler checks in real-clock mode.
    #[arg(long, env = "PAPERSTACK_POLL_INTERVAL")]
    poll_interval: Option<u64>,
    #[arg(long)]
    snapshot_every: Option<u64>,
}

#[derive(Debug, Subcommand)]
enum ShipTypeCmd {
    /// List registered ship types.
    List,
    /// Register a ship type from template parts.
    Register {
        #[arg(long)]
        id: Option<String>,
        #[arg(long)]
        name: String,
        /// `SFI,NAME,SUPPLIER[,DOC...]`, repeatable.
        #[arg(long = "part")]
        parts: Vec<String>,
    },
}

#[derive(Debug, Subcommand)]
enum ShipCmd {
    List,
    /// Create a ship, optionally from a ship type.
    Create {
        #[arg(long)]
        id: Option<String>,
        #[arg(long)]
        name: String,
        #[arg(long = "type")]
        ship_type: Option<String>,
    },
    /// Print one ship with its inheritance notes.
    Show {
        id: String,
    },
}

#[derive(Debug, Subcommand)]
enum DesignCmd {
    /// Open a design on a ship.
    Create {
        #[arg(long)]
        id: Option<String>,
        #[arg(long)]
        ship: String,
        #[arg(long)]
        title: String,
    },
    /// Attach a draft to a design.
    Attach {
        #[arg(long)]
        design: String,
        #[arg(long)]
        draft: String,
    },
}

#[derive(Debug, Subcommand)]
enum PartCmd {
    /// The ship's parts list, ordered by SFI code.
    List {
        #[arg(long)]
        ship: String,
    },
    /// Sketch a part; any of the three identity attributes may be missing.
    Draft {
        #[arg(long)]
        id: Option<String>,
        #[arg(long)]
        ship: String,
        #[arg(long)]
        design: Option<String>,
        #[arg(long)]
        sfi: Option<String>,
        #[arg(long)]
        name: Option<String>,
        #[arg(long)]
        supplier: Option<String>,
        /// Required document kind, repeatable.
        #[arg(long = "doc-kind")]
        doc_kinds: Vec<String>,
    },
    /// Fill in one missing attribute of a draft.
    Concretize {
        draft: String,
        #[arg(long)]
        attribute: String,
        #[arg(long)]
        value: String,
    },
    /// Replace a draft by a corrected one.
    Supersede {
        draft: String,
        #[arg(long)]
        new_id: Option<String>,
        /// `ATTRIBUTE=VALUE`, repeatable.
        #[arg(long = "set")]
        corrections: Vec<String>,
    },
}

#[derive(Debug, Args)]
struct DocArgs {
    #[arg(long)]
    sfi: String,
    #[arg(long)]
    name: String,
    #[arg(long)]
    supplier: String,
    /// Document name, e.g. "test certificate".
    #[arg(long)]
    doc: String,
}

impl DocArgs {
    fn id(&self) -> Result<DocumentId, CliError> {
        Ok(DocumentId::new(part(&self.sfi, &self.name, &self.supplier)?, &self.doc))
    }
}

#[derive(Debug, Subcommand)]
enum DocCmd {
    /// List every version of a document.
    Versions(DocArgs),
    /// Mark one version deprecated.
    Deprecate {
        #[command(flatten)]
        doc: DocArgs,
        #[arg(long)]
        version: u32,
    },
}

#[derive(Debug, Subcommand)]
enum SyncCmd {
    /// Bring a local replica up to date.
    Pull {
        /// Replica directory.
        #[arg(long)]
        replica: PathBuf,
        /// Start tracking a part, `SFI,NAME,SUPPLIER`; repeatable.
        #[arg(long = "track")]
        track: Vec<String>,
        /// Keep pulling every `--interval` seconds.
        #[arg(long)]
        watch: bool,
        #[arg(long, default_value_t = 60)]
        interval: u64,
        /// Stop watching after this many rounds.
        #[arg(long)]
        rounds: Option<u64>,
    },
    /// Upload a file as the next version of a document.
    Push {
        #[arg(long)]
        replica: PathBuf,
        #[command(flatten)]
        doc: DocArgs,
        #[arg(long)]
        file: PathBuf,
        #[arg(long, default_value = "")]
        format_tag: String,
    },
}

#[derive(Debug, Args)]
struct GrantArgs {
    #[arg(long)]
    org: String,
    /// SFI location, e.g. `36` or `/` for the root.
    #[arg(long)]
    loc: String,
    #[arg(long)]
    level: String,
}

impl GrantArgs {
    fn change(&self) -> Result<GrantChange, CliError> {
        Ok(GrantChange {
            principal: OrgId::new(&self.org),
            scope: location(&self.loc)?,
            level: level(&self.level)?,
        })
    }
}

#[derive(Debug, Subcommand)]
enum GrantCmd {
    Add(GrantArgs),
    Revoke(GrantArgs),
    /// Exit 0 if the organization holds the level at the location, else 1.
    Check(GrantArgs),
}

#[derive(Debug, Subcommand)]
enum PlanCmd {
    /// Import a project plan from its record format (or JSON for `.json`).
    Import {
        file: PathBuf,
    },
    /// Print a project plan in its record format.
    Export {
        id: String,
    },
    /// Build the requesting plan for a project plan.
    Generate {
        id: String,
        #[arg(long)]
        lead_time_days: Option<i64>,
    },
    /// Print the requesting plan.
    Show {
        id: String,
    },
}

#[derive(Debug, Subcommand)]
enum AlertCmd {
    /// Alerts visible to the actor.
    List,
}

#[derive(Debug, Subcommand)]
enum PollCmd {
    /// Polls issued so far.
    List,
}

#[derive(Debug, Subcommand)]
enum RequestCmd {
    /// Ask a supplier for a part or one of its documents.
    Send {
        #[arg(long)]
        sfi: String,
        #[arg(long)]
        name: String,
        #[arg(long)]
        supplier: String,
        #[arg(long)]
        doc: Option<String>,
        #[arg(long)]
        body: String,
    },
}

#[derive(Debug, Subcommand)]
enum ThreadCmd {
    /// Print a thread's messages.
    Show { id: String },
    /// Add a message to a thread.
    Post {
        id: String,
        #[arg(long)]
        body: String,
    },
}

#[derive(Debug, Subcommand)]
enum EventsCmd {
    /// Print events after `--since`; with `--follow`, keep waiting for more.
    Tail {
        #[arg(long, default_value_t = 0)]
        since: u64,
        #[arg(long)]
        follow: bool,
        /// Stop after this many events.
        #[arg(long)]
        limit: Option<usize>,
        /// Long-poll wait per request, in seconds.
        #[arg(long, default_value_t = 25)]
        wait: u64,
    },
}

#[derive(Debug, Subcommand)]
enum ClockCmd {
    /// Print the hub's current date.
    Show,
    /// Move a simulated clock forward and run the scheduler.
    Advance {
        #[arg(long)]
        to: NaiveDate,
    },
}

#[derive(Debug, Subcommand)]
enum ScenarioCmd {
    /// Run a scenario script against a fresh in-memory hub.
    Run { file: PathBuf },
}

#[derive(Debug, Error)]
enum CliError {
    #[error(transparent)]
    Client(#[from] ClientError),
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Local(String),
    /// A check answered no; nothing more to report.
    #[error("denied")]
    Denied,
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Client(ClientError::Transport(_)) => 3,
            CliError::Client(ClientError::Api { .. }) | CliError::Local(_) | CliError::Denied => 1,
            CliError::Usage(_) => 2,
        }
    }

    fn body(&self) -> ErrorBody {
        if let CliError::Client(ClientError::Api { body, .. }) = self {
            return body.clone();
        }
        let kind = match self {
            CliError::Usage(_) => ErrorKind::Invalid,
            CliError::Denied => ErrorKind::Forbidden,
            _ => ErrorKind::Internal,
        };
        ErrorBody {
            error: ErrorDetail {
                kind,
                message: self.to_string(),
                path: None,
            },
        }
    }
}

fn local(e: impl std::fmt::Display) -> CliError {
    CliError::Local(e.to_string())
}

fn usage(e: impl std::fmt::Display) -> CliError {
    CliError::Usage(e.to_string())
}

fn part(sfi: &str, name: &str, supplier: &str) -> Result<PartIdentity, CliError> {
    PartIdentity::parse(sfi, name, supplier).map_err(usage)
}

/// `SFI,NAME,SUPPLIER[,EXTRA...]`
fn part_spec(text: &str) -> Result<(PartIdentity, Vec<String>), CliError> {
    let fields: Vec<&str> = text.split(',').map(str::trim).collect();
    if fields.len() < 3 {
        return Err(usage(format!("expected SFI,NAME,SUPPLIER, got {text:?}")));
    }
    Ok((
        part(fields[0], fields[1], fields[2])?,
        fields[3..].iter().map(|s| s.to_string()).collect(),
    ))
}

fn location(text: &str) -> Result<SfiPath, CliError> {
    text.parse().map_err(usage)
}

fn level(text: &str) -> Result<Level, CliError> {
    text.parse().map_err(usage)
}

fn attribute(text: &str) -> Result<Attribute, CliError> {
    text.parse().map_err(usage)
}

struct Out<'a> {
    mode: OutputMode,
    w: &'a mut dyn Write,
}

impl Out<'_> {
    fn line(&mut self, text: impl std::fmt::Display) -> Result<(), CliError> {
        writeln!(self.w, "{text}").map_err(local)
    }

    fn records<T: Serialize>(&mut self, items: &[T]) -> Result<(), CliError> {
        for item in items {
            let line = serde_json::to_string(item).map_err(local)?;
            self.line(line)?;
        }
        Ok(())
    }

    /// Human text, or the items as records.
    fn show<T: Serialize>(&mut self, items: &[T], human: impl FnOnce() -> String) -> Result<(), CliError> {
        match self.mode {
            OutputMode::Records => self.records(items),
            OutputMode::Human => {
                let text = human();
                write!(self.w, "{text}").map_err(local)?;
                if !text.is_empty() && !text.ends_with('\n') {
                    writeln!(self.w).map_err(local)?;
                }
                Ok(())
            }
        }
    }

    fn reply(&mut self, reply: &Reply) -> Result<(), CliError> {
        self.show(std::slice::from_ref(reply), || describe(reply))
    }
}

fn describe(reply: &Reply) -> String {
    match reply {
        Reply::Initialized { project } => format!("initialized {project}"),
        Reply::ShipType { id, name, parts } => format!("ship type {id} ({name}), {parts} parts"),
        Reply::Ship { id, name, notes, .. } => {
            let mut s = format!("ship {id} ({name})");
            for n in notes {
                s.push_str(&format!("\n  note: {n:?}"));
            }
            s
        }
        Reply::Design { design } => format!("design {} on {}", design.id, design.ship),
        Reply::Draft { draft, alert } => {
            let mut s = match draft.missing().as_slice() {
                [] => format!("draft {} identifiable", draft.id),
                missing => format!(
                    "draft {} missing {}",
                    draft.id,
                    missing.iter().map(|a| a.to_string()).collect::<Vec<_>>().join(", ")
                ),
            };
            if let Some(alert) = alert {
                s.push_str(&format!("\n  alert {}: {}", alert.id, alert.message));
            }
            s
        }
        Reply::Attached { design, draft } => format!("attached {draft} to {design}"),
        Reply::Uploaded {
            doc,
            version,
            created,
        } => {
            if *created {
                format!("{doc} v{} {}", version.version, version.content_hash)
            } else {
                format!("{doc} v{} already current", version.version)
            }
        }
        Reply::Deprecated { doc, version } => format!("deprecated {doc} v{}", version.version),
        Reply::GrantChanged { changed } => {
            if *changed { "changed" } else { "unchanged" }.to_owned()
        }
        Reply::PlanImported { plan, tasks } => format!("plan {plan} imported, {tasks} tasks"),
        Reply::PlanGenerated { plan, alerts } => {
            let mut s = plan.to_csv();
            for a in alerts {
                s.push_str(&format!("alert {}: {}\n", a.id, a.message));
            }
            s
        }
        Reply::Requested { request } => {
            format!("thread {} poll {}", request.thread.id, request.poll.id)
        }
        Reply::Thread { thread } => format!("thread {}: {} messages", thread.id, thread.messages.len()),
        Reply::Ticked { today, actions } => format!("{today}: {} actions", actions.len()),
    }
}

struct Context {
    file: ConfigFile,
    hub: Option<String>,
    actor: Option<String>,
    key: Option<String>,
}

impl Context {
    fn client(&self) -> Result<Client, CliError> {
        let hub = self
            .hub
            .clone()
            .or_else(|| self.file.client.hub.clone())
            .unwrap_or_else(|| config::DEFAULT_HUB.to_owned());
        let actor = self
            .actor
            .clone()
            .or_else(|| self.file.client.actor.clone())
            .ok_or_else(|| usage("no acting organization: pass --actor or set PAPERSTACK_ACTOR"))?;
        let client = Client::new(hub, actor);
        Ok(match &self.key {
            Some(k) => client.with_key(k),
            None => client,
        })
    }
}

/// Parses `args` and runs the command, writing to `out`/`err`. Returns the
/// process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = if code == 0 {
                write!(out, "{e}")
            } else {
                write!(err, "{e}")
            };
            return code;
        }
    };
    match execute(cli, out) {
        Ok(()) => 0,
        Err(CliError::Denied) => 1,
        Err(e) => {
            let body = serde_json::to_string(&e.body()).unwrap_or_else(|_| e.to_string());
            let _ = writeln!(err, "{body}");
            e.exit_code()
        }
    }
}

fn execute(cli: Cli, w: &mut dyn Write) -> Result<(), CliError> {
    let file = ConfigFile::load(cli.config.as_deref()).map_err(usage)?;
    let mode = cli.output.or(file.client.output).unwrap_or_default();
    let ctx = Context {
        hub: cli.hub,
        actor: cli.actor,
        key: cli.key,
        file,
    };
    let mut out = Out { mode, w };
    match cli.command {
        Cmd::Serve(args) => serve(&ctx.file, args),
        Cmd::Health => {
            let h = ctx.client()?.health()?;
            out.show(&[&h], || format!("{} {} journal_len={}", h.status, h.project, h.journal_len))
        }
        Cmd::ShipType(cmd) => ship_type(&ctx.client()?, cmd, &mut out),
        Cmd::Ship(cmd) => ship(&ctx.client()?, cmd, &mut out),
        Cmd::Design(cmd) => design(&ctx.client()?, cmd, &mut out),
        Cmd::Part(cmd) => part_cmd(&ctx.client()?, cmd, &mut out),
        Cmd::Doc(cmd) => doc(&ctx.client()?, cmd, &mut out),
        Cmd::Sync(cmd) => sync(ctx.client()?, cmd, &mut out),
        Cmd::Grant(cmd) => grant(&ctx.client()?, cmd, &mut out),
        Cmd::Plan(cmd) => plan(&ctx.client()?, cmd, &mut out),
        Cmd::Alert(AlertCmd::List) => {
            let alerts = ctx.client()?.alerts()?;
            out.show(&alerts, || {
                alerts
                    .iter()
                    .map(|a| {
                        let state = if a.resolved_at.is_some() { "resolved" } else { "open" };
                        format!("{} {:?} {state} {}\n", a.id, a.severity, a.message)
                    })
                    .collect()
            })
        }
        Cmd::Poll(PollCmd::List) => {
            let polls = ctx.client()?.polls()?;
            out.show(&polls, || {
                polls
                    .iter()
                    .map(|p| format!("{} {:?} {} by {}\n", p.id, p.classification, p.at.date_naive(), p.requester))
                    .collect()
            })
        }
        Cmd::Request(RequestCmd::Send {
            sfi,
            name,
            supplier,
            doc,
            body,
        }) => {
            let part = part(&sfi, &name, &supplier)?;
            let subject = match doc {
                Some(kind) => Subject::Document {
                    doc: DocumentId::new(part, kind),
                },
                None => Subject::Part { part },
            };
            out.reply(&ctx.client()?.send_request(&subject, &body)?)
        }
        Cmd::Thread(ThreadCmd::Show { id }) => {
            let thread = ctx.client()?.thread(&ThreadId::new(&id))?;
            out.show(&thread.messages, || {
                thread
                    .messages
                    .iter()
                    .map(|m| format!("[{}] {}: {}\n", m.sent_at.date_naive(), m.author, m.body))
                    .collect()
            })
        }
        Cmd::Thread(ThreadCmd::Post { id, body }) => {
            out.reply(&ctx.client()?.post_message(&ThreadId::new(&id), &body)?)
        }
        Cmd::Events(EventsCmd::Tail {
            since,
            follow,
            limit,
            wait,
        }) => tail(&ctx.client()?, since, follow, limit, Duration::from_secs(wait), &mut out),
        Cmd::Clock(ClockCmd::Show) => {
            let info = ctx.client()?.clock()?;
            out.show(&[&info], || match info.clock {
                Clock::Real => format!("real {}", info.today),
                Clock::Simulated { .. } => format!("simulated {}", info.today),
            })
        }
        Cmd::Clock(ClockCmd::Advance { to }) => out.reply(&ctx.client()?.advance_clock(to)?),
        Cmd::Scenario(ScenarioCmd::Run { file }) => scenario(&file, &mut out),
    }
}

fn serve(file: &ConfigFile, args: ServeArgs) -> Result<(), CliError> {
    let s = &file.server;
    let listen = args
        .listen
        .or_else(|| s.listen.clone())
        .unwrap_or_else(|| config::DEFAULT_LISTEN.to_owned());
    let data_dir = args
        .data_dir
        .or_else(|| s.data_dir.clone())
        .unwrap_or_else(|| PathBuf::from("paperstack-data"));
    let clock = match args.clock.or(s.clock).unwrap_or_default() {
        ClockMode::Real => Clock::Real,
        ClockMode::Simulated => Clock::Simulated {
            today: args
                .start
                .or(s.start)
                .unwrap_or_else(|| chrono::Utc::now().date_naive()),
        },
    };
    let owner = args.owner.or_else(|| s.owner.clone()).unwrap_or_else(|| "OWNER".into());
    let genesis = Genesis {
        project: args.project.or_else(|| s.project.clone()).unwrap_or_else(|| "project".into()),
        owner: OrgId::new(owner),
        clock,
        lead_time_days: args
            .lead_time_days
            .or(s.lead_time_days)
            .unwrap_or(paperstack::flow::DEFAULT_LEAD_TIME_DAYS),
    };
    let poll = Duration::from_secs(args.poll_interval.or(s.poll_interval_secs).unwrap_or(60).max(1));
    let snapshot_every = args.snapshot_every.or(s.snapshot_every).unwrap_or(1000);

    let _ = tracing_subscriber::fmt().with_writer(std::io::stderr).try_init();
    let hub = Hub::open(&data_dir, Some(genesis), snapshot_every).map_err(local)?;
    if hub.recovered().torn_bytes > 0 {
        tracing::warn!("dropped {} bytes of a torn journal tail", hub.recovered().torn_bytes);
    }
    let listener = std::net::TcpListener::bind(&listen).map_err(|e| local(format!("cannot listen on {listen}: {e}")))?;
    listener.set_nonblocking(true).map_err(local)?;
    tracing::info!("serving {} on {listen} from {}", hub.state().project, data_dir.display());
    let runtime = tokio::runtime::Runtime::new().map_err(local)?;
    runtime
        .block_on(async move {
            let listener = tokio::net::TcpListener::from_std(listener)?;
            crate::server::serve(listener, crate::server::AppState::new(hub), poll, async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await
        })
        .map_err(local)
}

fn ship_type(client: &Client, cmd: ShipTypeCmd, out: &mut Out) -> Result<(), CliError> {
    match cmd {
        ShipTypeCmd::List => {
            let types = client.ship_types()?;
            out.show(&types, || {
                types
                    .iter()
                    .map(|t| format!("{} {} parts={} documents={}\n", t.id, t.name, t.parts, t.documents))
                    .collect()
            })
        }
        ShipTypeCmd::Register { id, name, parts } => {
            let parts = parts
                .iter()
                .map(|p| part_spec(p).map(|(part, documents)| TemplatePart { part, documents }))
                .collect::<Result<_, _>>()?;
            out.reply(&client.register_ship_type(&NewShipType {
                id: id.map(ShipTypeId::new),
                name,
                parts,
            })?)
        }
    }
}

fn ship(client: &Client, cmd: ShipCmd, out: &mut Out) -> Result<(), CliError> {
    match cmd {
        ShipCmd::List => {
            let ships = client.ships()?;
            out.show(&ships, || {
                ships
                    .iter()
                    .map(|s| {
                        let from = s.ship_type.as_ref().map(|t| format!(" from {t}")).unwrap_or_default();
                        format!("{} {}{from} parts={}\n", s.id, s.name, s.parts)
                    })
                    .collect()
            })
        }
        ShipCmd::Create { id, name, ship_type } => out.reply(&client.create_ship(&NewShip {
            id: id.map(ShipId::new),
            name,
            ship_type: ship_type.map(ShipTypeId::new),
        })?),
        ShipCmd::Show { id } => {
            let s = client.ship(&ShipId::new(&id))?;
            out.show(&[&s], || format!("{} {} parts={} notes={}", s.id, s.name, s.parts, s.notes.len()))
        }
    }
}

fn design(client: &Client, cmd: DesignCmd, out: &mut Out) -> Result<(), CliError> {
    match cmd {
        DesignCmd::Create { id, ship, title } => out.reply(&client.create_design(&NewDesign {
            id: id.map(DesignId::new),
            ship: ShipId::new(ship),
            title,
        })?),
        DesignCmd::Attach { design, draft } => {
            out.reply(&client.attach(&DesignId::new(design), &DraftId::new(draft))?)
        }
    }
}

fn part_cmd(client: &Client, cmd: PartCmd, out: &mut Out) -> Result<(), CliError> {
    match cmd {
        PartCmd::List { ship } => {
            let entries = client.parts_list(&ShipId::new(ship))?;
            out.show(&entries, || parts_list_csv(&entries))
        }
        PartCmd::Draft {
            id,
            ship,
            design,
            sfi,
            name,
            supplier,
            doc_kinds,
        } => out.reply(&client.create_draft(&NewDraft {
            id: id.map(DraftId::new),
            ship: ShipId::new(ship),
            design: design.map(DesignId::new),
            sfi,
            name,
            supplier_id: supplier,
            required_doc_kinds: (!doc_kinds.is_empty()).then(|| doc_kinds.into_iter().collect()),
        })?),
        PartCmd::Concretize {
            draft,
            attribute: attr,
            value,
        } => out.reply(&client.concretize(
            &DraftId::new(draft),
            &ConcretizeDraft {
                attribute: attribute(&attr)?,
                value,
            },
        )?),
        PartCmd::Supersede {
            draft,
            new_id,
            corrections,
        } => {
            let corrections = corrections
                .iter()
                .map(|c| {
                    let (a, v) = c
                        .split_once('=')
                        .ok_or_else(|| usage(format!("expected ATTRIBUTE=VALUE, got {c:?}")))?;
                    Ok((attribute(a)?, v.to_owned()))
                })
                .collect::<Result<_, CliError>>()?;
            out.reply(&client.supersede(
                &DraftId::new(draft),
                &SupersedeDraft {
                    new_id: new_id.map(DraftId::new),
                    corrections,
                },
            )?)
        }
    }
}

fn doc(client: &Client, cmd: DocCmd, out: &mut Out) -> Result<(), CliError> {
    match cmd {
        DocCmd::Versions(args) => {
            let versions = client.versions(&args.id()?)?;
            out.show(&versions, || {
                versions
                    .iter()
                    .map(|v| {
                        let flag = if v.deprecated { " deprecated" } else { "" };
                        format!("v{} {} {}{flag}\n", v.version, v.content_hash, v.author_org)
                    })
                    .collect()
            })
        }
        DocCmd::Deprecate { doc, version } => out.reply(&client.deprecate(&doc.id()?, version)?),
    }
}

const REPLICA_FILE: &str = "replica.json";

fn load_replica(dir: &Path, owner: &OrgId) -> Result<Replica, CliError> {
    let path = dir.join(REPLICA_FILE);
    if !path.exists() {
        return Ok(Replica::new(owner.clone()));
    }
    let text = std::fs::read_to_string(&path).map_err(local)?;
    serde_json::from_str(&text).map_err(|e| local(format!("{}: {e}", path.display())))
}

fn save_replica(dir: &Path, replica: &Replica) -> Result<(), CliError> {
    let tmp = dir.join(format!("{REPLICA_FILE}.tmp"));
    std::fs::write(&tmp, serde_json::to_vec_pretty(replica).map_err(local)?).map_err(local)?;
    std::fs::rename(&tmp, dir.join(REPLICA_FILE)).map_err(local)
}

fn sync(mut client: Client, cmd: SyncCmd, out: &mut Out) -> Result<(), CliError> {
    match cmd {
        SyncCmd::Pull {
            replica: dir,
            track,
            watch,
            interval,
            rounds,
        } => {
            std::fs::create_dir_all(&dir).map_err(local)?;
            let blobs = DirBlobs::open(dir.join("blobs")).map_err(local)?;
            let mut replica = load_replica(&dir, client.actor())?;
            for spec in &track {
                let (part, _) = part_spec(spec)?;
                if !replica.tree.contains(&part) {
                    replica.register_part(part).map_err(local)?;
                }
            }
            let mut round = 0;
            loop {
                let report = pull(&mut replica, &mut client, &blobs).map_err(|e| match e {
                    paperstack::sync::SyncError::Remote(m) => CliError::Client(ClientError::Transport(m)),
                    e => local(e),
                })?;
                save_replica(&dir, &replica)?;
                out.show(&report.applied, || {
                    let mut s: String = report
                        .applied
                        .iter()
                        .map(|e| format!("{:?} {} v{}\n", e.action, e.doc, e.version))
                        .collect();
                    for (e, why) in &report.failed {
                        s.push_str(&format!("failed {} v{}: {why}\n", e.doc, e.version));
                    }
                    s
                })?;
                round += 1;
                if !watch || rounds.is_some_and(|n| round >= n) {
                    break;
                }
                std::thread::sleep(Duration::from_secs(interval));
            }
            Ok(())
        }
        SyncCmd::Push {
            replica: dir,
            doc,
            file,
            format_tag,
        } => {
            std::fs::create_dir_all(&dir).map_err(local)?;
            let blobs = DirBlobs::open(dir.join("blobs")).map_err(local)?;
            let mut replica = load_replica(&dir, client.actor())?;
            let bytes = std::fs::read(&file).map_err(|e| local(format!("{}: {e}", file.display())))?;
            let id = doc.id()?;
            let ack = push(&mut replica, &mut client, &blobs, &id, &bytes, &format_tag).map_err(|e| match e {
                paperstack::sync::SyncError::Remote(m) => remote_error(m),
                e => local(e),
            })?;
            save_replica(&dir, &replica)?;
            out.show(&[&ack], || {
                if ack.created {
                    format!("{} v{} {}", ack.doc, ack.version, ack.content_hash)
                } else {
                    format!("{} v{} already current", ack.doc, ack.version)
                }
            })
        }
    }
}

/// Hub refusals come back through the sync port as text; keep them domain
/// errors rather than transport ones.
fn remote_error(message: String) -> CliError {
    if message.starts_with("transport:") {
        CliError::Client(ClientError::Transport(message))
    } else {
        CliError::Local(message)
    }
}

fn grant(client: &Client, cmd: GrantCmd, out: &mut Out) -> Result<(), CliError> {
    match cmd {
        GrantCmd::Add(args) => out.reply(&client.grant(&args.change()?)?),
        GrantCmd::Revoke(args) => out.reply(&client.revoke(&args.change()?)?),
        GrantCmd::Check(args) => {
            let c = args.change()?;
            let check = client.check(&c.principal, &c.scope, c.level)?;
            out.show(&[&check], || {
                let verdict = if check.allowed { "yes" } else { "no" };
                format!("{verdict}: {} {} at {}", check.org, check.level, check.location)
            })?;
            if check.allowed {
                Ok(())
            } else {
                Err(CliError::Denied)
            }
        }
    }
}

fn plan(client: &Client, cmd: PlanCmd, out: &mut Out) -> Result<(), CliError> {
    match cmd {
        PlanCmd::Import { file } => {
            let text = std::fs::read_to_string(&file).map_err(|e| local(format!("{}: {e}", file.display())))?;
            let reply = if file.extension().is_some_and(|e| e == "json") {
                let plan: ProjectPlan = serde_json::from_str(&text).map_err(usage)?;
                client.import_plan(&plan)?
            } else {
                client.import_records(&text)?
            };
            out.reply(&reply)
        }
        PlanCmd::Export { id } => {
            let id = PlanId::new(id);
            match out.mode {
                OutputMode::Human => {
                    let text = client.export_records(&id)?;
                    out.show::<()>(&[], || text)
                }
                OutputMode::Records => out.records(&[client.export_plan(&id)?]),
            }
        }
        PlanCmd::Generate { id, lead_time_days } => {
            out.reply(&client.generate(&PlanId::new(id), lead_time_days)?)
        }
        PlanCmd::Show { id } => {
            let plan = client.requesting(&PlanId::new(id))?;
            out.show(&plan.entries, || plan.to_csv())
        }
    }
}

fn tail(
    client: &Client,
    mut since: u64,
    follow: bool,
    limit: Option<usize>,
    wait: Duration,
    out: &mut Out,
) -> Result<(), CliError> {
    let mut shown = 0;
    loop {
        let page = client.events(since, if follow { wait } else { Duration::ZERO })?;
        let take = limit.map_or(page.events.len(), |l| (l - shown).min(page.events.len()));
        let events = &page.events[..take];
        out.show(events, || {
            events
                .iter()
                .map(|e| format!("{} {} {:?}\n", e.id, e.occurred_at.date_naive(), e.kind))
                .collect()
        })?;
        shown += take;
        since = events.last().map_or(page.last_id, |e| e.id);
        if !follow || limit.is_some_and(|l| shown >= l) {
            return Ok(());
        }
    }
}

fn scenario(file: &Path, out: &mut Out) -> Result<(), CliError> {
    let text = std::fs::read_to_string(file).map_err(|e| local(format!("{}: {e}", file.display())))?;
    match run_scenario(&text) {
        Ok(run) => {
            let entries = &run.transcript.entries;
            out.show(entries, || run.transcript.to_string())
        }
        Err(e) => {
            if let Some(t) = e.transcript() {
                out.show(&t.entries, || t.to_string())?;
            }
            Err(local(e))
        }
    }
}
