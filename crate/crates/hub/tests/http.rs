mod common;

use std::time::{Duration, Instant};

use paperstack::access::Level;
use paperstack::hub::{Clock, ErrorKind, Genesis, Hub, Reply};
use paperstack::ids::OrgId;
use paperstack::store::MemoryBlobs;
use paperstack::sync::{pull, Replica};
use paperstack_hub::api::{ErrorBody, GrantChange, NewShip};
use paperstack_hub::{Client, ClientError};
use serde_json::json;

use common::*;

fn grant(principal: &str, scope: &str) -> GrantChange {
    GrantChange {
        principal: OrgId::new(principal),
        scope: scope.parse().unwrap(),
        level: Level::Read,
    }
}

#[test]
fn health_reports_the_journal_length() {
    let server = serve(seeded());
    let health = Client::new(server.url(), "anyone").health().unwrap();
    assert_eq!(health.status, "ok");
    assert_eq!(health.journal_len, server.app.journal_len());
}

#[test]
fn repeated_key_gets_the_recorded_reply() {
    let server = serve(empty());
    let http = reqwest::blocking::Client::new();
    let body = json!({
        "actor": "YARD",
        "idempotency_key": "k-1",
        "request": { "id": "S1", "name": "Polar Star" }
    });
    let first = http.post(format!("{}/ships", server.url())).json(&body).send().unwrap();
    assert_eq!(first.status(), 200);
    let first = first.text().unwrap();
    let len = server.app.journal_len();
    let again = http.post(format!("{}/ships", server.url())).json(&body).send().unwrap();
    assert_eq!(again.status(), 200);
    assert_eq!(again.text().unwrap(), first);
    assert_eq!(server.app.journal_len(), len);

    let other = json!({
        "actor": "YARD",
        "idempotency_key": "k-1",
        "request": { "id": "S2", "name": "Other" }
    });
    let resp = http.post(format!("{}/ships", server.url())).json(&other).send().unwrap();
    assert_eq!(resp.status(), 409);
}

#[test]
fn validation_errors_name_the_field() {
    let server = serve(empty());
    let http = reqwest::blocking::Client::new();
    let resp = http
        .post(format!("{}/ships", server.url()))
        .json(&json!({ "actor": "YARD", "idempotency_key": "k", "request": { "id": "S1" } }))
        .send()
        .unwrap();
    assert_eq!(resp.status(), 400);
    let body: ErrorBody = resp.json().unwrap();
    assert_eq!(body.error.kind, ErrorKind::Invalid);
    assert_eq!(body.error.path.as_deref(), Some("request"));
    assert!(body.error.message.contains("name"), "{}", body.error.message);

    let resp = http
        .post(format!("{}/grants", server.url()))
        .json(&json!({
            "actor": "YARD", "idempotency_key": "k2",
            "request": { "principal": "SUP-A", "scope": "36", "level": "sometimes" }
        }))
        .send()
        .unwrap();
    let body: ErrorBody = resp.json().unwrap();
    assert_eq!(body.error.path.as_deref(), Some("request.level"));

    let resp = http
        .post(format!("{}/ships", server.url()))
        .json(&json!({ "request": { "name": "X" }, "idempotency_key": "k3" }))
        .send()
        .unwrap();
    let body: ErrorBody = resp.json().unwrap();
    assert!(body.error.message.contains("actor"), "{}", body.error.message);
}

#[test]
fn unknown_fields_are_ignored() {
    let server = serve(empty());
    let resp = reqwest::blocking::Client::new()
        .post(format!("{}/ships", server.url()))
        .json(&json!({
            "actor": "YARD", "idempotency_key": "k", "trace": "x",
            "request": { "name": "Polar Star", "colour": "red" }
        }))
        .send()
        .unwrap();
    assert_eq!(resp.status(), 200);
}

#[test]
fn unknown_route_is_a_structured_404() {
    let server = serve(empty());
    let resp = reqwest::blocking::get(format!("{}/nowhere", server.url())).unwrap();
    assert_eq!(resp.status(), 404);
    let body: ErrorBody = resp.json().unwrap();
    assert_eq!(body.error.kind, ErrorKind::NotFound);
}

#[test]
fn events_long_poll_wakes_on_a_new_event() {
    let server = serve(empty());
    let yard = Client::new(server.url(), "YARD");
    let waiter = yard.clone();
    let started = Instant::now();
    let handle = std::thread::spawn(move || waiter.events(0, Duration::from_secs(10)).unwrap());
    std::thread::sleep(Duration::from_millis(200));
    yard.grant(&grant("SUP-A", "36")).unwrap();
    let page = handle.join().unwrap();
    assert!(started.elapsed() < Duration::from_secs(5));
    assert_eq!(page.events.len(), 1);
    assert_eq!(page.last_id, 1);

    let started = Instant::now();
    let page = yard.events(1, Duration::from_millis(300)).unwrap();
    assert!(page.events.is_empty());
    assert_eq!(page.last_id, 1);
    assert!(started.elapsed() >= Duration::from_millis(300));
}

#[test]
fn event_feed_is_filtered_per_organization() {
    let hub = seeded();
    let state = hub.state();
    let server = serve(hub);
    for org in ["YARD", "SUP-A", "SUP-B", "SUP-C", "SUP-Z"] {
        let page = Client::new(server.url(), org).events(0, Duration::ZERO).unwrap();
        let expected: Vec<u64> = state
            .events
            .all()
            .iter()
            .filter(|e| e.audience.contains(&OrgId::new(org)))
            .map(|e| e.id)
            .collect();
        let got: Vec<u64> = page.events.iter().map(|e| e.id).collect();
        assert_eq!(got, expected, "{org}");
        assert!(got.windows(2).all(|w| w[0] < w[1]));
    }
}

#[test]
fn real_clock_refuses_clock_changes() {
    let hub = Hub::in_memory(Genesis {
        clock: Clock::Real,
        ..Genesis::simulated("YARD", day(2026, 3, 2))
    });
    let server = serve(hub);
    let yard = Client::new(server.url(), "YARD");
    let err = yard.advance_clock(day(2030, 1, 1)).unwrap_err();
    assert_eq!(err.kind(), Some(ErrorKind::Forbidden));
    assert!(matches!(yard.clock().unwrap().clock, Clock::Real));
}

#[test]
fn simulated_clock_does_not_run_backwards() {
    let server = serve(seeded());
    let yard = Client::new(server.url(), "YARD");
    let err = yard.advance_clock(day(2026, 3, 1)).unwrap_err();
    assert_eq!(err.kind(), Some(ErrorKind::Conflict));
    assert_eq!(yard.clock().unwrap().today, day(2026, 4, 1));
}

#[test]
fn restart_reproduces_the_state() {
    let dir = tempfile::tempdir().unwrap();
    let genesis = Genesis::simulated("YARD", day(2026, 3, 2));
    let (digest, len) = {
        let server = serve(Hub::open(dir.path(), Some(genesis), 3).unwrap());
        let yard = Client::new(server.url(), "YARD");
        yard.create_ship(&NewShip {
            id: Some("S1".into()),
            name: "Polar Star".into(),
            ship_type: None,
        })
        .unwrap();
        yard.grant(&grant("SUP-A", "36")).unwrap();
        Client::new(server.url(), "SUP-A")
            .push(&evap_cert(), b"certificate", "pdf")
            .unwrap();
        yard.advance_clock(day(2026, 3, 9)).unwrap();
        let out = (server.app.digest(), server.app.journal_len());
        server.stop().unwrap();
        out
    };
    let reopened = Hub::open(dir.path(), None, 3).unwrap();
    assert_eq!(reopened.journal_len(), len);
    assert_eq!(reopened.digest(), digest);
    let server = serve(reopened);
    assert_eq!(Client::new(server.url(), "x").health().unwrap().journal_len, len);
}

#[test]
fn replica_pulls_over_http() {
    let server = serve(seeded());
    let doc = evap_cert();
    let mut yard = Client::new(server.url(), "YARD");
    let mut replica = Replica::new("YARD");
    replica.register_part(doc.part.clone()).unwrap();
    let blobs = MemoryBlobs::new();
    let report = pull(&mut replica, &mut yard, &blobs).unwrap();
    assert!(report.is_clean());
    assert_eq!(replica.latest(&doc).unwrap().0, 1);
    let again = pull(&mut replica, &mut yard, &blobs).unwrap();
    assert!(again.applied.is_empty());

    let mut stranger = Client::new(server.url(), "SUP-Z");
    let mut theirs = Replica::new("SUP-Z");
    theirs.register_part(doc.part.clone()).unwrap();
    assert!(pull(&mut theirs, &mut stranger, &MemoryBlobs::new())
        .unwrap()
        .applied
        .is_empty());
    let hash = replica.latest(&doc).unwrap().1.content_hash;
    let err = stranger.blob(&hash).unwrap_err();
    assert_eq!(err.kind(), Some(ErrorKind::Forbidden));
}

#[test]
fn identical_push_is_already_current() {
    let server = serve(seeded());
    let sup_a = Client::new(server.url(), "SUP-A");
    let reply = sup_a
        .push(&evap_cert(), b"EVAP-2 pressure test certificate", "pdf")
        .unwrap();
    match reply {
        Reply::Uploaded { created, version, .. } => {
            assert!(!created);
            assert_eq!(version.version, 1);
        }
        other => panic!("{other:?}"),
    }
    let reply = sup_a.push(&evap_cert(), b"revision B", "pdf").unwrap();
    assert!(matches!(reply, Reply::Uploaded { created: true, .. }));
    assert_eq!(sup_a.versions(&evap_cert()).unwrap().len(), 2);
}

#[test]
fn csv_exports_match_the_library() {
    let hub = seeded();
    let state = hub.state();
    let server = serve(hub);
    let yard = Client::new(server.url(), "YARD");
    assert_eq!(
        yard.parts_list_csv(&"S1".into()).unwrap(),
        paperstack::parts::parts_list_csv(&state.parts.parts_list(&"S1".into()))
    );
    assert_eq!(
        yard.requesting_csv(&"PL1".into()).unwrap(),
        state.flow.requesting(&"PL1".into()).unwrap().to_csv()
    );
}

#[test]
fn plan_records_round_trip() {
    let server = serve(seeded());
    let yard = Client::new(server.url(), "YARD");
    let records = yard.export_records(&"PL1".into()).unwrap();
    let plan = yard.export_plan(&"PL1".into()).unwrap();
    assert_eq!(paperstack::flow::ProjectPlan::from_records(&records).unwrap(), plan);

    let fresh = serve(seeded_without_plan());
    let yard2 = Client::new(fresh.url(), "YARD");
    yard2.import_records(&records).unwrap();
    assert_eq!(yard2.export_plan(&"PL1".into()).unwrap(), plan);
}

/// The example project up to, but excluding, the plan import.
fn seeded_without_plan() -> Hub {
    let cut = SCRIPT.find("op = \"import_plan\"").unwrap();
    let head = &SCRIPT[..SCRIPT[..cut].rfind("[[step]]").unwrap()];
    paperstack::hub::scenario::run_scenario(head).unwrap().hub
}

#[test]
fn unreachable_hub_is_a_transport_error() {
    let err = Client::new("http://127.0.0.1:1", "YARD").health().unwrap_err();
    assert!(matches!(err, ClientError::Transport(_)));
}
