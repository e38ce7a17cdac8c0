mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::process::{Command, Output};

use paperstack_hub::api::{ErrorBody, Method, ENDPOINTS};
use paperstack_hub::Running;

use common::*;

const BIN: &str = env!("CARGO_BIN_EXE_paperstack");

/// Runs the binary against a server and notes which routes each
/// subcommand reached.
struct Driver<'a> {
    server: &'a Running,
    reached: Vec<(String, BTreeSet<(String, String)>)>,
}

impl<'a> Driver<'a> {
    fn new(server: &'a Running) -> Self {
        Self {
            server,
            reached: Vec::new(),
        }
    }

    fn run(&mut self, actor: &str, args: &[&str]) -> Output {
        let before = self.server.app.served();
        let out = Command::new(BIN)
            .args(["--hub", &self.server.url(), "--actor", actor])
            .args(args)
            .env_remove("PAPERSTACK_CONFIG")
            .output()
            .unwrap();
        let after = self.server.app.served();
        let routes = after
            .into_iter()
            .filter(|(k, n)| before.get(k) != Some(n))
            .map(|(k, _)| k)
            .collect();
        let sub = if args[0] == "health" {
            "health".to_owned()
        } else {
            args[..2].join(" ")
        };
        self.reached.push((sub, routes));
        out
    }

    fn ok(&mut self, actor: &str, args: &[&str]) -> String {
        let out = self.run(actor, args);
        assert!(
            out.status.success(),
            "{args:?}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
        String::from_utf8(out.stdout).unwrap()
    }
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_owned()
}

/// The example project, driven entirely through the command line.
fn drive_project(d: &mut Driver, dir: &Path) {
    let manual = write(dir, "manual.txt", "COOL-X user manual, revision A");
    let evap = write(dir, "evap.txt", "EVAP-2 pressure test certificate");
    let fan = write(dir, "fan.txt", "FAN-7 test certificate");
    let plan = write(
        dir,
        "plan.csv",
        "plan,PL1,S1\n\
         task,T1,Install evaporator,2026-03-12,2026-03-14,draft:P1\n\
         task,T2,Mount fans,2026-03-22,2026-03-25,draft:P2\n\
         task,T3,Pressure test,2026-04-01,2026-04-03,draft:P3\n",
    );
    let replica = |org: &str| dir.join(org).to_str().unwrap().to_owned();
    let cert = "test certificate";

    d.ok("SUP-C", &["sync", "push", "--replica", &replica("c"), "--sfi", "362.003", "--name", "COOL-X", "--supplier", "SUP-C", "--doc", "user manual", "--file", &manual, "--format-tag", "pdf"]);
    d.ok("YARD", &["ship-type", "register", "--id", "reefer-4000", "--name", "Reefer 4000", "--part", "362.003,COOL-X,SUP-C,user manual"]);
    d.ok("YARD", &["ship", "create", "--id", "S1", "--name", "Polar Star", "--type", "reefer-4000"]);
    d.ok("YARD", &["design", "create", "--id", "D1", "--ship", "S1", "--title", "Cargo hold cooling"]);
    d.ok("YARD", &["part", "draft", "--id", "P1", "--ship", "S1", "--design", "D1", "--sfi", "362.010", "--name", "EVAP-2", "--doc-kind", cert]);
    d.ok("YARD", &["part", "draft", "--id", "P2", "--ship", "S1", "--design", "D1", "--name", "FAN-7", "--supplier", "SUP-B", "--doc-kind", cert]);
    d.ok("YARD", &["part", "draft", "--id", "P3", "--ship", "S1", "--design", "D1", "--sfi", "363.020", "--supplier", "SUP-A", "--doc-kind", cert]);
    d.ok("YARD", &["part", "concretize", "P1", "--attribute", "supplier_id", "--value", "SUP-A"]);
    d.ok("YARD", &["part", "concretize", "P2", "--attribute", "sfi", "--value", "471.001"]);
    d.ok("YARD", &["part", "concretize", "P3", "--attribute", "name", "--value", "VALVE-3"]);
    d.ok("YARD", &["grant", "add", "--org", "SUP-A", "--loc", "36", "--level", "read"]);
    d.ok("YARD", &["plan", "import", &plan]);
    d.ok("YARD", &["plan", "generate", "PL1"]);
    d.ok("SUP-A", &["sync", "push", "--replica", &replica("a"), "--sfi", "362.010", "--name", "EVAP-2", "--supplier", "SUP-A", "--doc", cert, "--file", &evap, "--format-tag", "pdf"]);
    let refused = d.run("SUP-B", &["clock", "advance", "--to", "2026-03-05"]);
    assert_eq!(refused.status.code(), Some(1));
    d.ok("YARD", &["clock", "advance", "--to", "2026-03-05"]);
    d.ok("YARD", &["clock", "advance", "--to", "2026-03-15"]);
    d.ok("SUP-B", &["sync", "push", "--replica", &replica("b"), "--sfi", "471.001", "--name", "FAN-7", "--supplier", "SUP-B", "--doc", cert, "--file", &fan, "--format-tag", "pdf"]);
    d.ok("YARD", &["clock", "advance", "--to", "2026-03-16"]);
    d.ok("YARD", &["clock", "advance", "--to", "2026-03-25"]);
    d.ok("YARD", &["request", "send", "--sfi", "363.020", "--name", "VALVE-3", "--supplier", "SUP-A", "--doc", cert, "--body", "The pressure test is on 1 April. Please send the valve certificate."]);
    d.ok("SUP-A", &["thread", "post", "thread-1", "--body", "The certificate is still at the test lab."]);
    d.ok("YARD", &["clock", "advance", "--to", "2026-04-01"]);
}

#[test]
fn command_line_reproduces_the_example_project() {
    let oracle = seeded().state();
    let server = serve(empty());
    let dir = tempfile::tempdir().unwrap();
    let mut d = Driver::new(&server);
    drive_project(&mut d, dir.path());

    let parts = d.ok("YARD", &["part", "list", "--ship", "S1"]);
    assert_eq!(parts, paperstack::parts::parts_list_csv(&oracle.parts.parts_list(&"S1".into())));
    let plan = d.ok("YARD", &["plan", "show", "PL1"]);
    assert_eq!(plan, oracle.flow.requesting(&"PL1".into()).unwrap().to_csv());

    let state = server.app.state();
    let kinds = |s: &paperstack::hub::ProjectState| -> Vec<_> {
        s.events.all().iter().map(|e| (e.kind, e.audience.clone())).collect()
    };
    assert_eq!(kinds(&state), kinds(&oracle));
    assert_eq!(state.flow.alerts.all(), oracle.flow.alerts.all());
}

#[test]
fn every_endpoint_belongs_to_one_subcommand() {
    let server = serve(empty());
    let dir = tempfile::tempdir().unwrap();
    let mut d = Driver::new(&server);
    drive_project(&mut d, dir.path());
    let cert = "test certificate";
    let pulled = dir.path().join("yard").to_str().unwrap().to_owned();
    let extra: &[&[&str]] = &[
        &["health"],
        &["ship-type", "list"],
        &["ship", "list"],
        &["ship", "show", "S1"],
        &["design", "attach", "--design", "D1", "--draft", "P1"],
        &["part", "list", "--ship", "S1"],
        &["part", "supersede", "P2", "--set", "name=FAN-8"],
        &["doc", "versions", "--sfi", "362.010", "--name", "EVAP-2", "--supplier", "SUP-A", "--doc", cert],
        &["doc", "deprecate", "--sfi", "362.010", "--name", "EVAP-2", "--supplier", "SUP-A", "--doc", cert, "--version", "1"],
        &["sync", "pull", "--replica", &pulled, "--track", "362.010,EVAP-2,SUP-A"],
        &["grant", "check", "--org", "SUP-A", "--loc", "362", "--level", "read"],
        &["grant", "revoke", "--org", "SUP-A", "--loc", "36", "--level", "read"],
        &["plan", "export", "PL1"],
        &["plan", "show", "PL1"],
        &["alert", "list"],
        &["poll", "list"],
        &["thread", "show", "thread-1"],
        &["events", "tail", "--since", "3"],
        &["clock", "show"],
    ];
    for args in extra {
        d.ok("YARD", args);
    }

    let owner: BTreeMap<(String, String), &str> = ENDPOINTS
        .iter()
        .map(|e| {
            let m = match e.method {
                Method::Get => "GET",
                Method::Post => "POST",
            };
            ((m.to_owned(), e.path.to_owned()), e.subcommand)
        })
        .collect();
    assert_eq!(owner.len(), ENDPOINTS.len(), "duplicate endpoint");
    let mut reached = BTreeSet::new();
    for (sub, routes) in &d.reached {
        for route in routes {
            assert_eq!(owner.get(route), Some(&sub.as_str()), "{sub} reached {route:?}");
            reached.insert(route.clone());
        }
    }
    let all: BTreeSet<_> = owner.keys().cloned().collect();
    assert_eq!(reached, all);
}

#[test]
fn grant_check_exit_code_mirrors_the_check() {
    let server = serve(seeded());
    let mut d = Driver::new(&server);
    let yes = d.run("SUP-A", &["grant", "check", "--org", "SUP-A", "--loc", "362", "--level", "read"]);
    assert_eq!(yes.status.code(), Some(0));
    let no = d.run("SUP-A", &["grant", "check", "--org", "SUP-A", "--loc", "47", "--level", "read"]);
    assert_eq!(no.status.code(), Some(1));
    let upload = d.run("SUP-A", &["grant", "check", "--org", "SUP-A", "--loc", "36", "--level", "upload"]);
    assert_eq!(upload.status.code(), Some(1));
}

#[test]
fn refusals_print_a_parsable_error() {
    let server = serve(seeded());
    let mut d = Driver::new(&server);
    let out = d.run("SUP-Z", &["ship", "create", "--name", "Rogue"]);
    assert_eq!(out.status.code(), Some(1));
    let body: ErrorBody = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(body.error.kind, paperstack::hub::ErrorKind::Forbidden);
}

#[test]
fn usage_and_transport_exit_codes() {
    let bad = Command::new(BIN).args(["ship", "launch"]).output().unwrap();
    assert_eq!(bad.status.code(), Some(2));
    let no_actor = Command::new(BIN)
        .args(["--hub", "http://127.0.0.1:1", "ship", "list"])
        .env_remove("PAPERSTACK_ACTOR")
        .env_remove("PAPERSTACK_CONFIG")
        .current_dir(std::env::temp_dir())
        .output()
        .unwrap();
    assert_eq!(no_actor.status.code(), Some(2));
    let down = Command::new(BIN)
        .args(["--hub", "http://127.0.0.1:1", "--actor", "YARD", "ship", "list"])
        .output()
        .unwrap();
    assert_eq!(down.status.code(), Some(3));
    let bad_level = Command::new(BIN)
        .args(["--hub", "http://127.0.0.1:1", "--actor", "YARD", "grant", "add", "--org", "A", "--loc", "36", "--level", "most"])
        .output()
        .unwrap();
    assert_eq!(bad_level.status.code(), Some(2));
}

#[test]
fn record_output_is_stable() {
    let server = serve(seeded());
    let mut d = Driver::new(&server);
    let parts = d.ok("YARD", &["--output", "records", "part", "list", "--ship", "S1"]);
    assert_eq!(parts, include_str!("golden/parts_list.jsonl"));
    let plan = d.ok("YARD", &["--output", "records", "plan", "show", "PL1"]);
    assert_eq!(plan, include_str!("golden/requesting_plan.jsonl"));
}

#[test]
fn exported_records_import_unchanged() {
    let server = serve(seeded());
    let mut d = Driver::new(&server);
    let records = d.ok("YARD", &["plan", "export", "PL1"]);
    let plan = paperstack::flow::ProjectPlan::from_records(&records).unwrap();
    assert_eq!(&plan, server.app.state().flow.plan(&"PL1".into()).unwrap());
    assert_eq!(plan.to_records(), records);
}

#[test]
fn config_file_and_environment() {
    let server = serve(seeded());
    let dir = tempfile::tempdir().unwrap();
    let config = write(
        dir.path(),
        "paperstack.toml",
        &format!("[client]\nhub = \"{}\"\nactor = \"SUP-Z\"\n", server.url()),
    );
    let check = |env_actor: Option<&str>| {
        let mut cmd = Command::new(BIN);
        cmd.args(["--config", &config, "grant", "check", "--org", "SUP-A", "--loc", "36", "--level", "read"])
            .env_remove("PAPERSTACK_ACTOR");
        if let Some(a) = env_actor {
            cmd.env("PAPERSTACK_ACTOR", a);
        }
        cmd.output().unwrap().status.code()
    };
    // SUP-Z may not ask about SUP-A; SUP-A may ask about itself.
    assert_eq!(check(None), Some(1));
    assert_eq!(check(Some("SUP-A")), Some(0));
}

#[test]
fn scenario_run_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let good = write(dir.path(), "project.toml", SCRIPT);
    let out = Command::new(BIN).args(["scenario", "run", &good]).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("assertions hold"));

    let broken = write(dir.path(), "broken.toml", "[[step]]\nop = \"expect\"\nevents = 3\n");
    let out = Command::new(BIN).args(["scenario", "run", &broken]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn watch_pulls_repeatedly() {
    let server = serve(seeded());
    let dir = tempfile::tempdir().unwrap();
    let replica = dir.path().join("r").to_str().unwrap().to_owned();
    let mut d = Driver::new(&server);
    let out = d.ok(
        "YARD",
        &["--output", "records", "sync", "pull", "--replica", &replica, "--track", "362.010,EVAP-2,SUP-A", "--watch", "--interval", "0", "--rounds", "2"],
    );
    // The first round fetches the certificate, the second finds nothing new.
    assert_eq!(out.lines().count(), 1);
    let held: paperstack::sync::Replica =
        serde_json::from_slice(&std::fs::read(dir.path().join("r/replica.json")).unwrap()).unwrap();
    assert_eq!(held.latest(&evap_cert()).unwrap().0, 1);
}
