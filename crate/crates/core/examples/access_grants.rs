//! Location-scoped grants inherit downward through the SFI tree.

use chrono::Utc;
use paperstack::access::{GrantSet, Level};
use paperstack::ids::OrgId;
use paperstack::sfi::{PartIdentity, SfiPath};

fn main() {
    let yard = OrgId::new("YARD");
    let sup_a = OrgId::new("SUP-A");
    let mut grants = GrantSet::bootstrap(&yard, Utc::now());
    grants.grant(&sup_a, "36".parse().unwrap(), Level::Read, &yard, Utc::now()).unwrap();
    grants.grant(&sup_a, "362".parse().unwrap(), Level::Upload, &yard, Utc::now()).unwrap();

    for at in ["/", "3", "36", "362", "363", "47"] {
        let path: SfiPath = at.parse().unwrap();
        let levels: Vec<String> = Level::ALL
            .iter()
            .filter(|l| grants.check(&sup_a, &path, **l))
            .map(|l| l.to_string())
            .collect();
        println!("SUP-A at {at:>3}: {levels:?}");
    }

    // A supplier always sees and uploads its own parts.
    let fan = PartIdentity::parse("471.001", "FAN-7", "SUP-A").unwrap();
    println!("own part outside grants: read={}", grants.check_part(&sup_a, &fan, Level::Read));

    // Only an admin at the scope may hand out grants.
    let err = grants
        .grant(&OrgId::new("SUP-B"), "36".parse().unwrap(), Level::Read, &sup_a, Utc::now())
        .unwrap_err();
    println!("{err}");
}
