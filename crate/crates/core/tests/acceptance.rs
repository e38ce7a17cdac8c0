//! End-to-end acceptance checks. Each criterion prints one PASS or FAIL line
//! with its runtime; the process exits non-zero if any criterion fails.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::OpenOptions;
use std::io::Write;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use chrono::{DateTime, NaiveDate, Utc};
use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};

use paperstack::access::{GrantSet, Level};
use paperstack::flow::{
    classify_poll, generate_requesting_plan, Alerts, Contract, EntryOrigin, EntryStatus, PlanRef,
    PollClass, PollLog, PollMode, ProjectPlan, Severity, Task, Visibility,
};
use paperstack::hub::scenario::{actions_logged_once, run_scenario};
use paperstack::hub::{Command, Genesis, Hub, JOURNAL_FILE};
use paperstack::ids::{DesignId, DraftId, OrgId, PlanId, ShipId, TaskId};
use paperstack::partner::Subject;
use paperstack::parts::{Attribute, DraftSpec, PartsBook};
use paperstack::sfi::{
    match_identity, parse_full_code, parse_sfi_code, CodeKind, PartIdentity, SfiCode, SfiPath,
    SfiTree,
};
use paperstack::store::{BlobStore, ContentHash, DocStore, DocumentId, MemoryBlobs};
use paperstack::sync::{apply, diff, HubView, LocalVersion, Replica};

const SCRIPT: &str = include_str!("../scenarios/new_ship_project.toml");

type Check = fn() -> Result<String, String>;

fn main() {
    let criteria: &[(&str, Duration, Check)] = &[
        ("sfi coding conformance", Duration::from_secs(1), sfi_coding),
        ("identity matching", Duration::from_secs(5), identity_matching),
        ("access inheritance", Duration::from_secs(10), access_inheritance),
        ("sync convergence", Duration::from_secs(30), sync_convergence),
        ("requesting plan", Duration::from_secs(10), requesting_plan),
        ("polling matrix", Duration::from_secs(1), polling_matrix),
        ("new ship scenario", Duration::from_secs(5), new_ship_scenario),
        ("persistence", Duration::from_secs(120), persistence),
    ];
    let mut failed = 0;
    for (name, budget, check) in criteria {
        let started = Instant::now();
        let outcome = match catch_unwind(AssertUnwindSafe(check)) {
            Ok(r) => r,
            Err(p) => Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into())),
        };
        let elapsed = started.elapsed();
        let outcome = outcome.and_then(|note| {
            if elapsed > *budget {
                Err(format!("took {elapsed:.2?}, budget {budget:?}"))
            } else {
                Ok(note)
            }
        });
        match outcome {
            Ok(note) => println!("PASS {name} ({elapsed:.2?}) {note}"),
            Err(e) => {
                failed += 1;
                println!("FAIL {name} ({elapsed:.2?}): {e}");
            }
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn org(s: &str) -> OrgId {
    OrgId::new(s)
}

fn at() -> DateTime<Utc> {
    DateTime::UNIX_EPOCH
}

fn day(n: i64) -> NaiveDate {
    NaiveDate::from_ymd_opt(2026, 3, 2).unwrap() + chrono::Duration::days(n)
}

// ---------------------------------------------------------------------------

fn sfi_coding() -> Result<String, String> {
    for n in 0u16..1000 {
        let text = format!("{n:03}");
        let code = parse_sfi_code(&text).map_err(|e| format!("{text}: {e}"))?;
        ensure!(code == SfiCode::from_number(n).unwrap(), "{text} number form");
        ensure!(code.to_string() == text, "{text} renders as {code}");
        ensure!(
            (code.main_group(), code.group(), code.sub_group()) == ((n / 100) as u8, (n / 10) as u8, n),
            "{text} hierarchy"
        );
        for s in 0u16..1000 {
            let full_text = format!("{text}.{s:03}");
            let full = parse_full_code(&full_text).map_err(|e| format!("{full_text}: {e}"))?;
            ensure!(full.to_string() == full_text, "{full_text} renders as {full}");
            ensure!(full.group() == code && full.suffix() == s, "{full_text} fields");
            let expected = if s <= 99 { CodeKind::Detail } else { CodeKind::Material };
            ensure!(full.kind() == expected, "{full_text} kind");
        }
    }
    ensure!(parse_full_code("362.099").unwrap().kind() == CodeKind::Detail, "099");
    ensure!(parse_full_code("362.100").unwrap().kind() == CodeKind::Material, "100");

    let labels = parse_sfi_code("362").unwrap().labels();
    ensure!(labels.main_group == Some("Equipment for cargo"), "main group label");
    ensure!(
        labels.group == Some("Freezing, refrigerating, and heating systems for cargo"),
        "group label"
    );
    ensure!(
        labels.sub_group == Some("Freezing and refrigerating systems for dry cargo"),
        "sub-group label"
    );
    let compressor = parse_full_code("362.003").unwrap();
    ensure!(compressor.label() == Some("Cooling compressor"), "detail label");
    ensure!(compressor.kind() == CodeKind::Detail, "362.003 is a detail code");
    Ok("1000 groups x 1000 suffixes".into())
}

// ---------------------------------------------------------------------------

const CODES: &[&str] = &["362", "362.003", "362.030", "471.001"];
const NAMES: &[&str] = &["COOL-X", "cool-x", "COOL-X ", "PUMP"];
const SUPPLIERS: &[&str] = &["SUP-A", "SUP-B", "sup-a"];

fn random_triple(rng: &mut StdRng) -> (&'static str, &'static str, &'static str) {
    (
        CODES.choose(rng).unwrap(),
        NAMES.choose(rng).unwrap(),
        SUPPLIERS.choose(rng).unwrap(),
    )
}

fn identity_matching() -> Result<String, String> {
    let mut rng = StdRng::seed_from_u64(1);
    let owner = org("OWNER");
    let mut triples = 0;
    let mut matched = 0;
    for _ in 0..100 {
        let mut grants = GrantSet::bootstrap(&owner, at());
        grants.grant(&org("YARD"), SfiPath::root(), Level::Read, &owner, at()).unwrap();
        let mut tree = SfiTree::new();
        let mut store = DocStore::new();
        let blobs = MemoryBlobs::new();
        let mut held: Vec<(&str, &str, &str)> = Vec::new();
        for _ in 0..rng.gen_range(1..12) {
            let t = random_triple(&mut rng);
            if held.contains(&t) {
                continue;
            }
            let part = PartIdentity::parse(t.0, t.1, t.2).unwrap();
            // The tree refuses a second part of the same name in one folder.
            if tree.register_part(part.clone()).is_err() {
                continue;
            }
            let doc = DocumentId::new(part, "manual");
            store
                .upload(&blobs, &grants, &doc, format!("{t:?}").as_bytes(), "pdf", &owner, at())
                .unwrap();
            held.push(t);
        }
        let view = HubView { tree: &tree, store: &store, grants: &grants };
        for _ in 0..100 {
            triples += 1;
            let q = random_triple(&mut rng);
            let query = PartIdentity::parse(q.0, q.1, q.2).unwrap();
            let mut replica = Replica::new("YARD");
            replica.register_part(query.clone()).unwrap();
            let fetched: BTreeSet<String> = diff(&replica.summary(), view, &org("YARD"))
                .entries()
                .iter()
                .map(|e| format!("{:?}", e.doc.part))
                .collect();
            let expected: BTreeSet<String> = held
                .iter()
                .filter(|h| h.0 == q.0 && h.1 == q.1 && h.2 == q.2)
                .map(|h| format!("{:?}", PartIdentity::parse(h.0, h.1, h.2).unwrap()))
                .collect();
            ensure!(fetched == expected, "{q:?}: synced {fetched:?}, expected {expected:?}");
            matched += fetched.len();
            for h in &held {
                let other = PartIdentity::parse(h.0, h.1, h.2).unwrap();
                ensure!(
                    match_identity(&query, &other) == (h == &q),
                    "{q:?} against {h:?}"
                );
            }
        }
    }
    ensure!(triples >= 10_000, "only {triples} triples");
    Ok(format!("{triples} triples, {matched} synced"))
}

// ---------------------------------------------------------------------------

/// A random tree of depth three, each folder with one to four children.
fn random_tree(rng: &mut StdRng) -> Vec<Vec<u8>> {
    let mut nodes = vec![vec![]];
    let mut frontier = vec![vec![]];
    for _ in 0..3 {
        let mut next = Vec::new();
        for parent in &frontier {
            let mut digits: Vec<u8> = (0..10).collect();
            digits.shuffle(rng);
            for d in digits.into_iter().take(rng.gen_range(1..=4)) {
                let mut child: Vec<u8> = parent.clone();
                child.push(d);
                next.push(child);
            }
        }
        nodes.extend(next.iter().cloned());
        frontier = next;
    }
    nodes
}

fn covers(grants: &[(String, Vec<u8>, Level)], who: &str, node: &[u8], level: Level) -> bool {
    grants
        .iter()
        .any(|(o, scope, l)| o == who && node.starts_with(scope) && *l >= level)
}

fn access_inheritance() -> Result<String, String> {
    let mut rng = StdRng::seed_from_u64(2);
    let owner = org("OWNER");
    let orgs = ["OWNER", "SUP-A", "SUP-B", "SUP-C"];
    let mut checks = 0;
    for round in 0..200 {
        let nodes = random_tree(&mut rng);
        let mut set = GrantSet::bootstrap(&owner, at());
        let mut oracle = vec![("OWNER".to_string(), vec![], Level::Admin)];
        for _ in 0..rng.gen_range(0..12) {
            let who = orgs[rng.gen_range(1..orgs.len())];
            let scope = nodes.choose(&mut rng).unwrap().clone();
            let level = *Level::ALL.choose(&mut rng).unwrap();
            set.grant(&org(who), SfiPath::from_digits(&scope).unwrap(), level, &owner, at())
                .unwrap();
            let g = (who.to_string(), scope, level);
            if !oracle.contains(&g) {
                oracle.push(g);
            }
        }
        for _ in 0..rng.gen_range(0..3) {
            let victim = rng.gen_range(1..oracle.len().max(2));
            if victim < oracle.len() {
                let (who, scope, level) = oracle.remove(victim);
                let removed = set
                    .revoke(&org(&who), SfiPath::from_digits(&scope).unwrap(), level, &owner)
                    .unwrap();
                ensure!(removed, "round {round}: revoke of a held grant");
            }
        }
        for node in &nodes {
            let path = SfiPath::from_digits(node).unwrap();
            for who in orgs {
                for level in Level::ALL {
                    let got = set.check(&org(who), &path, level);
                    checks += 1;
                    let want = covers(&oracle, who, node, level);
                    ensure!(got == want, "round {round}: {who} {level} at {path}: {got}");
                    if let Some(parent) = path.parent() {
                        ensure!(
                            !set.check(&org(who), &parent, level) || got,
                            "round {round}: {who} loses {level} below {parent}"
                        );
                    }
                    for lower in Level::ALL.iter().filter(|l| **l < level) {
                        ensure!(!got || set.check(&org(who), &path, *lower), "level order");
                    }
                }
            }
        }
    }
    Ok(format!("200 grant sets, {checks} checks"))
}

// ---------------------------------------------------------------------------

fn random_part(rng: &mut StdRng, i: usize) -> PartIdentity {
    let group = ["362", "363", "471", "472", "601"].choose(rng).unwrap();
    let code = if rng.gen_bool(0.5) {
        group.to_string()
    } else {
        format!("{group}.{:03}", rng.gen_range(0..200))
    };
    let supplier = ["SUP-A", "SUP-B"].choose(rng).unwrap();
    PartIdentity::parse(&code, &format!("PART-{i}"), supplier).unwrap()
}

fn sync_convergence() -> Result<String, String> {
    let mut rng = StdRng::seed_from_u64(3);
    let owner = org("OWNER");
    let yard = org("YARD");
    let (mut converged, mut withheld) = (0, 0);
    for round in 0..200 {
        let mut grants = GrantSet::bootstrap(&owner, at());
        let mut oracle = vec![];
        let mut tree = SfiTree::new();
        let mut store = DocStore::new();
        let blobs = MemoryBlobs::new();

        let parts: Vec<PartIdentity> = (0..rng.gen_range(1..10)).map(|i| random_part(&mut rng, i)).collect();
        let mut docs = Vec::new();
        for _ in 0..rng.gen_range(0..=50) {
            let part = parts.choose(&mut rng).unwrap().clone();
            let doc = DocumentId::new(part, ["manual", "drawing", "certificate"].choose(&mut rng).unwrap().to_string());
            if !docs.contains(&doc) {
                docs.push(doc);
            }
        }
        for doc in &docs {
            let _ = tree.register_part(doc.part.clone());
            for v in 0..rng.gen_range(1..=3) {
                // Some contents repeat across documents, so one blob can back
                // both a readable and an unreadable version.
                let bytes = if rng.gen_bool(0.2) {
                    format!("shared {}", rng.gen_range(0..3))
                } else {
                    format!("{round} {doc:?} {v}")
                };
                store.upload(&blobs, &grants, doc, bytes.as_bytes(), "pdf", &owner, at()).unwrap();
            }
            for (n, _) in store.versions(doc).to_vec().iter().enumerate() {
                if rng.gen_bool(0.15) {
                    store.deprecate(&grants, doc, n as u32 + 1, &owner, at()).unwrap();
                }
            }
        }
        for _ in 0..rng.gen_range(0..4) {
            let part = parts.choose(&mut rng).unwrap();
            let scope = part.path().truncated(rng.gen_range(0..=3));
            grants.grant(&yard, scope, Level::Read, &owner, at()).unwrap();
            oracle.push(("YARD".to_string(), scope.digits().to_vec(), Level::Read));
        }
        let readable = |p: &PartIdentity| covers(&oracle, "YARD", p.path().digits(), Level::Read);

        let mut replica = Replica::new("YARD");
        let local = MemoryBlobs::new();
        let mut registered = BTreeSet::new();
        for part in &parts {
            if rng.gen_bool(0.7) {
                replica.register_part(part.clone()).unwrap();
                registered.insert(part.clone());
            }
        }
        replica.register_part(PartIdentity::parse("362", "ELSEWHERE", "SUP-Z").unwrap()).unwrap();
        // Whatever the replica already holds is a genuine older prefix.
        for doc in &docs {
            if registered.contains(&doc.part) && rng.gen_bool(0.3) {
                for v in &store.versions(doc)[..rng.gen_range(1..=store.versions(doc).len())] {
                    local.put(&blobs.get(&v.content_hash).unwrap().unwrap()).unwrap();
                    replica
                        .hold(doc, v.version, LocalVersion { content_hash: v.content_hash, deprecated: false })
                        .unwrap();
                }
            }
        }
        let before = replica.clone();

        let view = HubView { tree: &tree, store: &store, grants: &grants };
        let changes = diff(&replica.summary(), view, &yard);
        let mut fetched = Vec::new();
        let report = apply(
            &mut replica,
            &changes,
            |h| {
                fetched.push(*h);
                Ok(blobs.get(h).unwrap().unwrap())
            },
            &local,
        );
        ensure!(report.is_clean(), "round {round}: {:?}", report.failed);

        for doc in &docs {
            let hub_view: BTreeMap<u32, (ContentHash, bool)> = store
                .versions(doc)
                .iter()
                .map(|v| (v.version, (v.content_hash, v.deprecated)))
                .collect();
            let mine: BTreeMap<u32, (ContentHash, bool)> = replica
                .held(doc)
                .map(|h| h.iter().map(|(n, l)| (*n, (l.content_hash, l.deprecated))).collect())
                .unwrap_or_default();
            if registered.contains(&doc.part) && readable(&doc.part) {
                ensure!(mine == hub_view, "round {round}: {doc:?} not converged");
                converged += 1;
            } else {
                withheld += 1;
                ensure!(replica.held(doc) == before.held(doc), "round {round}: leak into {doc:?}");
            }
        }
        for hash in &fetched {
            let legit = docs.iter().any(|d| {
                registered.contains(&d.part)
                    && readable(&d.part)
                    && store.versions(d).iter().any(|v| v.content_hash == *hash)
            });
            ensure!(legit, "round {round}: fetched unreadable blob {hash}");
        }
        let again = diff(&replica.summary(), view, &yard);
        ensure!(again.is_empty(), "round {round}: second diff has {} entries", again.len());
    }
    Ok(format!("200 states, {converged} documents converged, {withheld} withheld"))
}

// ---------------------------------------------------------------------------

const KINDS: &[&str] = &["manual", "test certificate", "drawing", "datasheet"];

fn requesting_plan() -> Result<String, String> {
    let mut rng = StdRng::seed_from_u64(4);
    let ship = ShipId::new("S1");
    let mut entries = 0;
    for round in 0..300 {
        let mut book = PartsBook::new();
        let mut tree = SfiTree::new();
        let mut drafts = Vec::new();
        for i in 0..rng.gen_range(1..=30) {
            let kinds: BTreeSet<String> = KINDS
                .iter()
                .filter(|_| rng.gen_bool(0.4))
                .map(|k| k.to_string())
                .collect();
            let spec = DraftSpec {
                sfi: Some(format!("{}.{:03}", 100 + i, rng.gen_range(0..1000))),
                name: Some(format!("P{i}")),
                supplier_id: rng.gen_bool(0.9).then(|| "SUP-A".to_string()),
                required_doc_kinds: Some(kinds),
            };
            let id = DraftId::new(format!("d{i}"));
            book.create_draft(Some(id.clone()), &ship, &spec, &mut tree).unwrap();
            drafts.push(id);
        }
        let mut designs: BTreeMap<DesignId, Vec<DraftId>> = BTreeMap::new();
        for j in 0..rng.gen_range(0..3) {
            let id = DesignId::new(format!("g{j}"));
            book.create_design(Some(id.clone()), &ship, "design").unwrap();
            let members: BTreeSet<DraftId> =
                (0..rng.gen_range(1..5)).map(|_| drafts.choose(&mut rng).unwrap().clone()).collect();
            for d in &members {
                book.attach(&id, d).unwrap();
            }
            designs.insert(id, members.into_iter().collect());
        }
        let tasks: Vec<Task> = (0..rng.gen_range(1..=20))
            .map(|t| {
                let start = day(rng.gen_range(0..120));
                let refs = (0..rng.gen_range(1..5))
                    .map(|_| match designs.keys().collect::<Vec<_>>().choose(&mut rng) {
                        Some(g) if rng.gen_bool(0.2) => PlanRef::Design((*g).clone()),
                        _ => PlanRef::Draft(drafts.choose(&mut rng).unwrap().clone()),
                    })
                    .collect();
                Task {
                    id: TaskId::new(format!("T{t}")),
                    name: format!("task {t}"),
                    start,
                    end: start + chrono::Duration::days(rng.gen_range(0..10)),
                    refs,
                }
            })
            .collect();
        let contracts: Vec<Contract> = (0..rng.gen_range(0..3))
            .map(|_| Contract {
                draft: drafts.choose(&mut rng).unwrap().clone(),
                doc_kind: KINDS.choose(&mut rng).unwrap().to_string(),
                due: day(rng.gen_range(0..120)),
            })
            .collect();
        let plan = ProjectPlan { id: PlanId::new("PL"), ship: ship.clone(), tasks, contracts };
        let lead = rng.gen_range(0..30);

        // Brute force over every (task, referenced draft, required kind).
        let mut want: BTreeMap<(String, String), (NaiveDate, bool)> = BTreeMap::new();
        let identity = |id: &DraftId| {
            let d = book.draft(id).unwrap();
            Some(format!("{}|{}|{}", d.sfi?, d.name.clone()?, d.supplier_id.clone()?))
        };
        let mut bump = |key: (String, String), date: NaiveDate, contract: bool| {
            let slot = want.entry(key).or_insert((date, contract));
            slot.0 = slot.0.min(date);
            slot.1 |= contract;
        };
        for task in &plan.tasks {
            for r in &task.refs {
                let members = match r {
                    PlanRef::Draft(d) => vec![d.clone()],
                    PlanRef::Design(g) => designs[g].clone(),
                };
                for d in members {
                    let Some(part) = identity(&d) else { continue };
                    for kind in &book.draft(&d).unwrap().required_doc_kinds {
                        bump((part.clone(), kind.clone()), task.start, false);
                    }
                }
            }
        }
        for c in &plan.contracts {
            if let Some(part) = identity(&c.draft) {
                bump((part, c.doc_kind.clone()), c.due, true);
            }
        }

        let generated = generate_requesting_plan(
            &plan,
            &book,
            lead,
            &org("YARD"),
            day(0),
            None,
            &mut Alerts::default(),
            &mut PollLog::default(),
        )
        .map_err(|e| format!("round {round}: {e}"))?;
        let mut got = BTreeMap::new();
        for e in &generated.plan.entries {
            let key = (
                format!("{}|{}|{}", e.part.sfi, e.part.name, e.part.supplier_id),
                e.doc_kind.clone(),
            );
            ensure!(
                e.request_at == e.need_by - chrono::Duration::days(lead),
                "round {round}: request_at of {key:?}"
            );
            ensure!(e.status == EntryStatus::Pending, "round {round}: fresh status");
            let contract = e.origin == EntryOrigin::Contract;
            ensure!(got.insert(key.clone(), (e.need_by, contract)).is_none(), "round {round}: duplicate {key:?}");
        }
        ensure!(got == want, "round {round}: plan {got:?}\noracle {want:?}");
        entries += got.len();
    }
    Ok(format!("300 plans, {entries} entries"))
}

// ---------------------------------------------------------------------------

fn polling_matrix() -> Result<String, String> {
    let table = [
        (PollMode::Manual, Visibility::Implicit, PollClass::Contract),
        (PollMode::Automatic, Visibility::Implicit, PollClass::Share),
        (PollMode::Manual, Visibility::Explicit, PollClass::Request),
        (PollMode::Automatic, Visibility::Explicit, PollClass::Workflow),
    ];
    for (mode, visibility, class) in table {
        let got = classify_poll(mode, visibility);
        ensure!(got == class, "{mode:?}/{visibility:?} gave {got:?}");
    }
    Ok("4 cells".into())
}

// ---------------------------------------------------------------------------

fn new_ship_scenario() -> Result<String, String> {
    let first = run_scenario(SCRIPT).map_err(|e| e.to_string())?;
    let second = run_scenario(SCRIPT).map_err(|e| e.to_string())?;
    ensure!(first.hub.digest() == second.hub.digest(), "digests differ between runs");
    ensure!(
        first.transcript.to_string() == second.transcript.to_string(),
        "transcripts differ between runs"
    );
    let state = first.hub.state();
    let plan = state.flow.requesting(&PlanId::new("PL1")).map_err(|e| e.to_string())?;
    ensure!(plan.entries.len() == 3, "{} entries", plan.entries.len());
    ensure!(plan.count(EntryStatus::Delivered) == 2, "delivered");
    ensure!(plan.count(EntryStatus::Late) == 1, "late");
    let problems = state
        .flow
        .alerts
        .all()
        .iter()
        .filter(|a| a.severity == Severity::Problem)
        .count();
    ensure!(problems == 1, "{problems} problem alerts");
    actions_logged_once(&state)?;
    Ok("2 delivered, 1 late, 1 problem".into())
}

// ---------------------------------------------------------------------------

fn random_command(rng: &mut StdRng, today: &mut NaiveDate) -> (OrgId, Command, Option<Vec<u8>>) {
    let yard = org("YARD");
    let supplier = ["SUP-A", "SUP-B"].choose(rng).unwrap().to_string();
    let part = PartIdentity::parse(
        ["362.003", "471.001", "363"].choose(rng).unwrap(),
        ["COOL-X", "FAN-7"].choose(rng).unwrap(),
        &supplier,
    )
    .unwrap();
    let doc = DocumentId::new(part.clone(), *["manual", "certificate"].choose(rng).unwrap());
    let draft = DraftId::new(format!("P{}", rng.gen_range(0..4)));
    let scope: SfiPath = ["36", "362", "47", "/"].choose(rng).unwrap().parse().unwrap();
    match rng.gen_range(0..12) {
        0 | 1 => {
            let bytes = format!("rev {}", rng.gen_range(0..4)).into_bytes();
            let hash = ContentHash::of(&bytes);
            (org(&supplier), Command::Upload { doc, hash, format_tag: "pdf".into() }, Some(bytes))
        }
        2 => (org(&supplier), Command::Deprecate { doc, version: rng.gen_range(1..4) }, None),
        3 => (
            yard,
            Command::Grant { principal: org(&supplier), scope, level: *Level::ALL.choose(rng).unwrap() },
            None,
        ),
        4 => (yard, Command::Revoke { principal: org(&supplier), scope, level: Level::Read }, None),
        5 => (yard, Command::CreateShip { id: Some("S1".into()), name: "Polar Star".into(), ship_type: None }, None),
        6 => (
            yard,
            Command::CreateDraft {
                id: Some(draft),
                ship: "S1".into(),
                spec: DraftSpec {
                    sfi: rng.gen_bool(0.5).then(|| part.sfi.to_string()),
                    name: Some(part.name.clone()),
                    supplier_id: None,
                    required_doc_kinds: None,
                },
                design: None,
            },
            None,
        ),
        7 => (
            yard,
            Command::Concretize { draft, attribute: Attribute::SupplierId, value: supplier },
            None,
        ),
        8 => {
            let plan = ProjectPlan {
                id: PlanId::new("PL1"),
                ship: "S1".into(),
                tasks: vec![Task {
                    id: TaskId::new("T1"),
                    name: "outfitting".into(),
                    start: *today + chrono::Duration::days(rng.gen_range(0..20)),
                    end: *today + chrono::Duration::days(25),
                    refs: (0..4).map(|i| PlanRef::Draft(DraftId::new(format!("P{i}")))).collect(),
                }],
                contracts: vec![],
            };
            if rng.gen_bool(0.5) {
                (yard, Command::ImportPlan { plan }, None)
            } else {
                (yard, Command::GeneratePlan { plan: PlanId::new("PL1"), lead_time_days: None }, None)
            }
        }
        9 => (org(&supplier), Command::ManualRequest { subject: Subject::Part { part }, body: "please".into() }, None),
        10 => {
            *today += chrono::Duration::days(rng.gen_range(0..6));
            (yard, Command::AdvanceClock { to: *today }, None)
        }
        _ => (yard, Command::Tick, None),
    }
}

/// Sends one command to both hubs and checks they agree on the outcome.
fn drive(
    disk: &mut Hub,
    twin: &mut Hub,
    actor: &OrgId,
    command: Command,
    bytes: Option<Vec<u8>>,
) -> Result<(), String> {
    let outcome = |hub: &mut Hub| match &bytes {
        Some(b) => {
            let Command::Upload { doc, format_tag, .. } = &command else { unreachable!() };
            hub.push(actor, None, doc, b, format_tag).map_err(|e| e.kind())
        }
        None => hub.submit(actor, None, command.clone()).map_err(|e| e.kind()),
    };
    let a = outcome(disk);
    let b = outcome(twin);
    ensure!(a == b, "{} diverged: {a:?} vs {b:?}", command.name());
    ensure!(disk.digest() == twin.digest(), "digest diverged after {}", command.name());
    Ok(())
}

fn persistence() -> Result<String, String> {
    let mut rng = StdRng::seed_from_u64(5);
    let genesis = Genesis { lead_time_days: 7, ..Genesis::simulated("YARD", day(0)) };
    let mut records = 0;
    for round in 0..60 {
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        let snapshot_every = *[0u64, 3, 7].choose(&mut rng).unwrap();
        let mut twin = Hub::in_memory(genesis.clone());
        let mut disk = Hub::open(dir.path(), Some(genesis.clone()), snapshot_every).map_err(|e| e.to_string())?;
        let mut today = day(0);
        for crash in 0..3 {
            for _ in 0..rng.gen_range(5..25) {
                let (actor, command, bytes) = random_command(&mut rng, &mut today);
                drive(&mut disk, &mut twin, &actor, command, bytes)
                    .map_err(|e| format!("round {round}: {e}"))?;
            }
            let (digest, len) = (disk.digest(), disk.journal_len());
            drop(disk);
            if rng.gen_bool(0.5) {
                // The process died halfway through writing the next record.
                let mut f = OpenOptions::new()
                    .append(true)
                    .open(dir.path().join(JOURNAL_FILE))
                    .map_err(|e| e.to_string())?;
                f.write_all(b"{\"seq\":").map_err(|e| e.to_string())?;
            }
            disk = Hub::open(dir.path(), None, snapshot_every)
                .map_err(|e| format!("round {round} crash {crash}: {e}"))?;
            ensure!(disk.digest() == digest, "round {round} crash {crash}: digest after replay");
            ensure!(disk.journal_len() == len, "round {round} crash {crash}: journal length");
            let replayed = Hub::replay(&disk.recovered().records, disk.blobs()).map_err(|e| e.to_string())?;
            ensure!(replayed.digest() == digest, "round {round}: journal-only replay");
        }
        records += disk.journal_len();
    }
    Ok(format!("60 sequences, {records} records, 180 crashes"))
}
