//! Registering parts and their documents in an SFI tree, then dumping and
//! reloading the tree in its line format.

use paperstack::sfi::{PartIdentity, SfiTree};

fn main() {
    let mut tree = SfiTree::new();
    let compressor = PartIdentity::parse("362.003", "COOL-X", "SUP-C").unwrap();
    let fan = PartIdentity::parse("471.001", "FAN-7", "SUP-B").unwrap();
    for part in [&compressor, &fan] {
        println!("{part}: {:?}", tree.register_part(part.clone()).unwrap());
    }
    // Same triple again is recognized, not duplicated.
    println!("again: {:?}", tree.register_part(compressor.clone()).unwrap());
    // Same name in the same folder from a different code is refused.
    let clash = PartIdentity::parse("362", "COOL-X", "SUP-C").unwrap();
    println!("clash: {}", tree.register_part(clash).unwrap_err());

    tree.add_document(&compressor, "user manual").unwrap();
    tree.add_document(&compressor, "test certificate").unwrap();
    tree.add_document(&fan, "test certificate").unwrap();

    let text = tree.to_lines();
    print!("{text}");
    let back = SfiTree::from_lines(&text).unwrap();
    assert_eq!(back, tree);
    println!("{} parts under 36", tree.parts_in_subtree(&"36".parse().unwrap()).count());
}
