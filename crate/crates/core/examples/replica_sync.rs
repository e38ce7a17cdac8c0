//! Pulling a replica from an in-process hub. Only documents at readable
//! locations arrive; a second pull is empty.

use chrono::NaiveDate;
use paperstack::access::Level;
use paperstack::hub::{Command, Genesis, Hub};
use paperstack::ids::OrgId;
use paperstack::sfi::PartIdentity;
use paperstack::store::{DocumentId, MemoryBlobs};
use paperstack::sync::{pull, Replica};

fn main() {
    let start = NaiveDate::from_ymd_opt(2026, 3, 2).unwrap();
    let mut hub = Hub::in_memory(Genesis::simulated("YARD", start));
    let yard = OrgId::new("YARD");

    let manual = DocumentId::new(PartIdentity::parse("362.003", "COOL-X", "SUP-C").unwrap(), "user manual");
    let drawing = DocumentId::new(PartIdentity::parse("471.001", "FAN-7", "SUP-B").unwrap(), "drawing");
    hub.push(&OrgId::new("SUP-C"), None, &manual, b"manual rev A", "pdf").unwrap();
    hub.push(&OrgId::new("SUP-C"), None, &manual, b"manual rev B", "pdf").unwrap();
    hub.push(&OrgId::new("SUP-B"), None, &drawing, b"fan drawing", "dwg").unwrap();
    hub.submit(
        &yard,
        None,
        Command::Grant { principal: OrgId::new("SUP-A"), scope: "36".parse().unwrap(), level: Level::Read },
    )
    .unwrap();

    let mut replica = Replica::new("SUP-A");
    replica.register_part(manual.part.clone()).unwrap();
    replica.register_part(drawing.part.clone()).unwrap();
    let blobs = MemoryBlobs::new();

    let report = pull(&mut replica, &mut hub.port("SUP-A"), &blobs).unwrap();
    for e in &report.applied {
        println!("applied {} v{}", e.doc, e.version);
    }
    println!("drawing held: {}", replica.held(&drawing).is_some());

    let again = pull(&mut replica, &mut hub.port("SUP-A"), &blobs).unwrap();
    println!("second pull applied {}", again.applied.len());
}
