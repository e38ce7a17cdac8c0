//! Explicit requests: a yard asks a supplier for a document, the supplier
//! answers in the thread, and each organization sees its own event feed.

use chrono::NaiveDate;
use paperstack::hub::{Command, Genesis, Hub, Reply};
use paperstack::ids::OrgId;
use paperstack::partner::Subject;
use paperstack::parts::DraftSpec;
use paperstack::sfi::PartIdentity;
use paperstack::store::DocumentId;

fn main() {
    let mut hub = Hub::in_memory(Genesis::simulated("YARD", NaiveDate::from_ymd_opt(2026, 3, 2).unwrap()));
    let yard = OrgId::new("YARD");
    let supplier = OrgId::new("SUP-A");
    let doc = DocumentId::new(PartIdentity::parse("363.020", "VALVE-3", "SUP-A").unwrap(), "test certificate");
    hub.submit(&yard, None, Command::CreateShip { id: Some("S1".into()), name: "Polar Star".into(), ship_type: None })
        .unwrap();
    let spec = DraftSpec {
        sfi: Some("363.020".into()),
        name: Some("VALVE-3".into()),
        supplier_id: Some("SUP-A".into()),
        required_doc_kinds: None,
    };
    hub.submit(&yard, None, Command::CreateDraft { id: None, ship: "S1".into(), spec, design: None })
        .unwrap();

    let reply = hub
        .submit(
            &yard,
            None,
            Command::ManualRequest { subject: Subject::Document { doc }, body: "Please send the valve certificate.".into() },
        )
        .unwrap();
    let Reply::Requested { request } = reply else { unreachable!() };
    println!("opened {} with {:?}", request.thread.id, request.thread.participants);

    hub.submit(
        &supplier,
        None,
        Command::PostMessage { thread: request.thread.id.clone(), body: "Still at the test lab.".into() },
    )
    .unwrap();

    let state = hub.state();
    for m in &state.partner.thread(&request.thread.id).unwrap().messages {
        println!("{}: {}", m.author, m.body);
    }
    for who in ["YARD", "SUP-A", "SUP-B"] {
        let kinds: Vec<_> = state.events_for(&OrgId::new(who), 0).iter().map(|e| e.kind).collect();
        println!("{who} sees {kinds:?}");
    }
}
