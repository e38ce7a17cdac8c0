//! Content-addressed document versions: uploads, dedup of identical bytes,
//! deprecation.

use chrono::Utc;
use paperstack::access::GrantSet;
use paperstack::ids::OrgId;
use paperstack::sfi::PartIdentity;
use paperstack::store::{DocStore, DocumentId, MemoryBlobs};

fn main() {
    let yard = OrgId::new("YARD");
    let supplier = OrgId::new("SUP-C");
    let grants = GrantSet::bootstrap(&yard, Utc::now());
    let blobs = MemoryBlobs::new();
    let mut store = DocStore::new();
    let doc = DocumentId::new(PartIdentity::parse("362.003", "COOL-X", "SUP-C").unwrap(), "user manual");

    for content in ["revision A", "revision A", "revision B"] {
        let out = store
            .upload(&blobs, &grants, &doc, content.as_bytes(), "pdf", &supplier, Utc::now())
            .unwrap();
        println!("{content:?} -> v{} created={} {}", out.version.version, out.created, out.version.content_hash);
    }

    store.deprecate(&grants, &doc, 2, &supplier, Utc::now()).unwrap();
    for v in store.versions(&doc) {
        println!("v{} by {} deprecated={}", v.version, v.author_org, v.deprecated);
    }
    println!("latest: v{}", store.latest(&doc).unwrap().version);

    // Someone without a grant cannot upload for another supplier's part.
    let err = store
        .upload(&blobs, &grants, &doc, b"forged", "pdf", &OrgId::new("SUP-Z"), Utc::now())
        .unwrap_err();
    println!("{err}");
}
