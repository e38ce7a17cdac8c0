//! Starting a new ship from a registered ship type: the template's parts and
//! documents are inherited and pinned to the versions on the hub.

use chrono::NaiveDate;
use paperstack::hub::{Command, Genesis, Hub, Reply};
use paperstack::ids::{OrgId, ShipId};
use paperstack::sfi::PartIdentity;
use paperstack::ship::{InheritanceNote, TemplatePart};
use paperstack::store::DocumentId;

fn main() {
    let mut hub = Hub::in_memory(Genesis::simulated("YARD", NaiveDate::from_ymd_opt(2026, 3, 2).unwrap()));
    let yard = OrgId::new("YARD");
    let compressor = PartIdentity::parse("362.003", "COOL-X", "SUP-C").unwrap();
    let manual = DocumentId::new(compressor.clone(), "user manual");
    hub.push(&OrgId::new("SUP-C"), None, &manual, b"COOL-X manual, revision A", "pdf").unwrap();

    hub.submit(
        &yard,
        None,
        Command::RegisterShipType {
            id: Some("reefer-4000".into()),
            name: "Reefer 4000".into(),
            parts: vec![
                TemplatePart { part: compressor, documents: vec!["user manual".into()] },
                TemplatePart {
                    part: PartIdentity::parse("471.001", "FAN-7", "SUP-B").unwrap(),
                    documents: vec!["drawing".into()],
                },
            ],
        },
    )
    .unwrap();

    let reply = hub
        .submit(
            &yard,
            None,
            Command::CreateShip { id: Some("S1".into()), name: "Polar Star".into(), ship_type: Some("reefer-4000".into()) },
        )
        .unwrap();
    if let Reply::Ship { notes, .. } = reply {
        for note in notes {
            match note {
                InheritanceNote::Unresolved { doc } => println!("no version yet: {doc}"),
                InheritanceNote::DeprecatedLatest { doc, version } => println!("pinned deprecated v{version}: {doc}"),
            }
        }
    }

    // A later revision does not move the ship's pin.
    hub.push(&OrgId::new("SUP-C"), None, &manual, b"COOL-X manual, revision B", "pdf").unwrap();
    let state = hub.state();
    let ship = state.fleet.ship(&ShipId::new("S1")).unwrap();
    print!("{}", ship.tree_lines());
    println!("hub latest v{}", state.store.latest(&manual).unwrap().version);
}
