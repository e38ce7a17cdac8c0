//! Keeps a supplier's local replica in step with a hub over HTTP: push a
//! revision, pull what the grants allow, pull again to see nothing new.

use std::time::Duration;

use chrono::NaiveDate;
use paperstack::access::Level;
use paperstack::hub::{Genesis, Hub};
use paperstack::ids::OrgId;
use paperstack::sfi::PartIdentity;
use paperstack::store::{DirBlobs, DocumentId};
use paperstack::sync::{pull, push, Replica};
use paperstack_hub::api::GrantChange;
use paperstack_hub::{spawn, Client};

fn main() {
    let hub = Hub::in_memory(Genesis::simulated("YARD", NaiveDate::from_ymd_opt(2026, 3, 2).unwrap()));
    let server = spawn(hub, "127.0.0.1:0", Duration::from_secs(60)).unwrap();
    let yard = Client::new(server.url(), "YARD");
    yard.grant(&GrantChange { principal: OrgId::new("SUP-A"), scope: "36".parse().unwrap(), level: Level::Read })
        .unwrap();

    let manual = DocumentId::new(PartIdentity::parse("362.003", "COOL-X", "SUP-C").unwrap(), "user manual");
    let mut sup_c = yard.as_actor("SUP-C");
    let dir = tempfile::tempdir().unwrap();
    let mut theirs = Replica::new("SUP-C");
    let their_blobs = DirBlobs::open(dir.path().join("sup-c")).unwrap();
    for content in ["revision A", "revision B", "revision B"] {
        let ack = push(&mut theirs, &mut sup_c, &their_blobs, &manual, content.as_bytes(), "pdf").unwrap();
        println!("pushed {content:?}: v{} created={}", ack.version, ack.created);
    }

    let mut sup_a = yard.as_actor("SUP-A");
    let mut mine = Replica::new("SUP-A");
    mine.register_part(manual.part.clone()).unwrap();
    let my_blobs = DirBlobs::open(dir.path().join("sup-a")).unwrap();
    for round in 1..=2 {
        let report = pull(&mut mine, &mut sup_a, &my_blobs).unwrap();
        println!("pull {round}: {} applied, {} failed", report.applied.len(), report.failed.len());
    }
    let (v, held) = mine.latest(&manual).unwrap();
    println!("holding v{v} {}", held.content_hash);
    server.stop().unwrap();
}
