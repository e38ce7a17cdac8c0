//! Serves the bundled example project on a local port and queries it over
//! HTTP as the yard and as a supplier.

use std::time::Duration;

use paperstack::hub::scenario::run_scenario;
use paperstack_hub::{spawn, Client};

const SCRIPT: &str = include_str!("../../core/scenarios/new_ship_project.toml");

fn main() {
    let hub = run_scenario(SCRIPT).unwrap().hub;
    let server = spawn(hub, "127.0.0.1:0", Duration::from_secs(60)).unwrap();
    println!("serving on {}", server.url());

    let yard = Client::new(server.url(), "YARD");
    let health = yard.health().unwrap();
    println!("{} {} journal_len={}", health.status, health.project, health.journal_len);
    print!("{}", yard.parts_list_csv(&"S1".into()).unwrap());
    print!("{}", yard.requesting_csv(&"PL1".into()).unwrap());

    let supplier = yard.as_actor("SUP-B");
    let err = supplier.parts_list(&"S1".into()).unwrap_err();
    println!("SUP-B parts list: {err}");
    let page = supplier.events(0, Duration::ZERO).unwrap();
    for e in &page.events {
        println!("SUP-B event {} {:?}", e.id, e.kind);
    }

    // A long poll returns as soon as something new happens.
    let waiter = yard.clone();
    let since = yard.events(0, Duration::ZERO).unwrap().last_id;
    let handle = std::thread::spawn(move || waiter.events(since, Duration::from_secs(10)).unwrap());
    std::thread::sleep(Duration::from_millis(100));
    yard.send_request(
        &paperstack::partner::Subject::Part {
            part: paperstack::sfi::PartIdentity::parse("471.001", "FAN-7", "SUP-B").unwrap(),
        },
        "Is a newer certificate coming?",
    )
    .unwrap();
    let page = handle.join().unwrap();
    println!("woke with {} new event(s), last id {}", page.events.len(), page.last_id);
    server.stop().unwrap();
}
