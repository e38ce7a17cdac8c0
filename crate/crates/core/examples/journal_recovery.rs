//! A hub on disk survives a crash: the journal is replayed (from the last
//! snapshot) and a torn final record is dropped.

use std::io::Write;

use chrono::NaiveDate;
use paperstack::access::Level;
use paperstack::hub::{Command, Genesis, Hub, JOURNAL_FILE};
use paperstack::ids::OrgId;
use paperstack::sfi::PartIdentity;
use paperstack::store::DocumentId;

fn main() {
    let dir = tempfile::tempdir().unwrap();
    let yard = OrgId::new("YARD");
    let genesis = Genesis::simulated("YARD", NaiveDate::from_ymd_opt(2026, 3, 2).unwrap());
    let doc = DocumentId::new(PartIdentity::parse("362.003", "COOL-X", "SUP-C").unwrap(), "user manual");

    let digest = {
        let mut hub = Hub::open(dir.path(), Some(genesis), 2).unwrap();
        hub.push(&OrgId::new("SUP-C"), Some("up-1"), &doc, b"revision A", "pdf").unwrap();
        hub.submit(
            &yard,
            Some("g-1"),
            Command::Grant { principal: OrgId::new("SUP-A"), scope: "36".parse().unwrap(), level: Level::Read },
        )
        .unwrap();
        println!("before: {} records, digest {}", hub.journal_len(), hub.digest());
        hub.digest()
    };

    let mut journal = std::fs::OpenOptions::new().append(true).open(dir.path().join(JOURNAL_FILE)).unwrap();
    journal.write_all(b"{\"seq\":4,\"at\":").unwrap();

    let hub = Hub::open(dir.path(), None, 2).unwrap();
    println!("after:  {} records, digest {}", hub.journal_len(), hub.digest());
    println!("torn bytes dropped: {}", hub.recovered().torn_bytes);
    assert_eq!(hub.digest(), digest);
}
