//! Sketching parts as drafts, completing them one attribute at a time and
//! correcting a registered part by superseding it.

use chrono::NaiveDate;
use paperstack::hub::{Command, Genesis, Hub};
use paperstack::ids::{OrgId, ShipId};
use paperstack::parts::{parts_list_csv, Attribute, DraftSpec};

fn run(hub: &mut Hub, actor: &OrgId, command: Command) {
    hub.submit(actor, None, command).unwrap();
}

fn main() {
    let mut hub = Hub::in_memory(Genesis::simulated("YARD", NaiveDate::from_ymd_opt(2026, 3, 2).unwrap()));
    let yard = OrgId::new("YARD");

    run(&mut hub, &yard, Command::CreateShip { id: Some("S1".into()), name: "Polar Star".into(), ship_type: None });
    run(&mut hub, &yard, Command::CreateDesign { id: Some("D1".into()), ship: "S1".into(), title: "Cargo hold cooling".into() });
    run(&mut hub, &yard, Command::CreateDraft {
        id: Some("P1".into()),
        ship: "S1".into(),
        spec: DraftSpec { sfi: Some("362.010".into()), ..Default::default() },
        design: Some("D1".into()),
    });
    run(&mut hub, &yard, Command::CreateDraft {
        id: Some("P2".into()),
        ship: "S1".into(),
        spec: DraftSpec { name: Some("FAN-7".into()), supplier_id: Some("SUP-B".into()), ..Default::default() },
        design: Some("D1".into()),
    });
    run(&mut hub, &yard, Command::Concretize { draft: "P1".into(), attribute: Attribute::Name, value: "EVAP-2".into() });
    run(&mut hub, &yard, Command::Concretize { draft: "P1".into(), attribute: Attribute::SupplierId, value: "SUP-A".into() });

    let ship = ShipId::new("S1");
    print!("{}", parts_list_csv(&hub.state().parts.parts_list(&ship)));

    // The fan turns out to belong under 471.
    run(&mut hub, &yard, Command::Concretize { draft: "P2".into(), attribute: Attribute::Sfi, value: "472.001".into() });
    run(&mut hub, &yard, Command::Supersede {
        draft: "P2".into(),
        new_id: Some("P2b".into()),
        corrections: vec![(Attribute::Sfi, "471.001".into())],
    });
    print!("{}", parts_list_csv(&hub.state().parts.parts_list(&ship)));
}
