//! Deriving a requesting plan from a project plan and letting the simulated
//! clock drive it: shared documents are picked up, missing ones are polled
//! for and turn late.

use chrono::NaiveDate;
use paperstack::flow::ProjectPlan;
use paperstack::hub::{Command, Genesis, Hub};
use paperstack::ids::{OrgId, PlanId};
use paperstack::parts::DraftSpec;
use paperstack::sfi::PartIdentity;
use paperstack::store::DocumentId;

const RECORDS: &str = "\
plan,PL1,S1
task,T1,Install evaporator,2026-03-12,2026-03-14,draft:P1
task,T2,Pressure test,2026-03-20,2026-03-21,draft:P1,draft:P2
";

fn date(d: u32) -> NaiveDate {
    NaiveDate::from_ymd_opt(2026, 3, d).unwrap()
}

fn main() {
    let yard = OrgId::new("YARD");
    let mut hub = Hub::in_memory(Genesis { lead_time_days: 5, ..Genesis::simulated("YARD", date(2)) });
    hub.submit(&yard, None, Command::CreateShip { id: Some("S1".into()), name: "Polar Star".into(), ship_type: None })
        .unwrap();
    for (id, sfi, name, supplier) in [("P1", "362.010", "EVAP-2", "SUP-A"), ("P2", "363.020", "VALVE-3", "SUP-B")] {
        let spec = DraftSpec {
            sfi: Some(sfi.into()),
            name: Some(name.into()),
            supplier_id: Some(supplier.into()),
            required_doc_kinds: Some(["test certificate".to_string()].into()),
        };
        hub.submit(&yard, None, Command::CreateDraft { id: Some(id.into()), ship: "S1".into(), spec, design: None })
            .unwrap();
    }
    let plan = ProjectPlan::from_records(RECORDS).unwrap();
    hub.submit(&yard, None, Command::ImportPlan { plan }).unwrap();
    hub.submit(&yard, None, Command::GeneratePlan { plan: "PL1".into(), lead_time_days: None }).unwrap();
    print!("{}", hub.state().flow.requesting(&PlanId::new("PL1")).unwrap().to_csv());

    let cert = DocumentId::new(PartIdentity::parse("362.010", "EVAP-2", "SUP-A").unwrap(), "test certificate");
    hub.push(&OrgId::new("SUP-A"), None, &cert, b"EVAP-2 certificate", "pdf").unwrap();

    for d in [7, 15, 20] {
        hub.submit(&yard, None, Command::AdvanceClock { to: date(d) }).unwrap();
        println!("-- {}", date(d));
        print!("{}", hub.state().flow.requesting(&PlanId::new("PL1")).unwrap().to_csv());
    }
    for alert in hub.state().flow.alerts.open() {
        println!("{:?}: {}", alert.severity, alert.message);
    }
}
