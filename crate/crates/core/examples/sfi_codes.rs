//! Parsing SFI group and detail codes and looking up their labels.

use paperstack::sfi::{parse_full_code, parse_sfi_code, SfiPath};

fn main() {
    let code = parse_sfi_code("362").unwrap();
    let labels = code.labels();
    println!("{code}: main group {} / group {} / sub-group {}", code.main_group(), code.group(), code.sub_group());
    println!("  {:?}", labels.main_group);
    println!("  {:?}", labels.group);
    println!("  {:?}", labels.sub_group);

    for text in ["362.003", "362.099", "362.100"] {
        let full = parse_full_code(text).unwrap();
        println!("{full}: {:?} {:?}", full.kind(), full.label());
    }

    let path: SfiPath = "362".parse().unwrap();
    println!("folder form {}", path.folder_form());
    for ancestor in path.ancestors_or_self() {
        println!("  {ancestor}");
    }

    for bad in ["36", "3a2", "362.03"] {
        println!("{bad}: {}", parse_full_code(bad).map(|c| c.to_string()).unwrap_or_else(|e| e.to_string()));
    }
}
