//! SFI group codes, the folder tree built from them and the three-attribute
//! part identity used to match parts across organizations.

mod code;
mod labels;
mod tree;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ids::OrgId;

pub use code::{
    parse_full_code, parse_sfi_code, CodeKind, CodeLabels, FullCode, PartCode, SfiCode, SfiPath,
};
pub use tree::{Registration, SfiTree, TreeNode};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SfiError {
    #[error("SFI code {0:?} must have exactly three digits")]
    NotThreeDigits(String),
    #[error("SFI code {0:?} contains non-decimal characters")]
    NonDecimal(String),
    #[error("malformed SFI code {0:?}, expected GGG.SSS")]
    MalformedCode(String),
    #[error("SFI path depth {0} exceeds the three group levels")]
    PathTooDeep(usize),
    #[error("part name {name:?} already used by {existing} in the subtree at {scope}")]
    DuplicateNameInSubtree {
        name: String,
        existing: Box<PartIdentity>,
        scope: SfiPath,
    },
    #[error("part name must not be empty")]
    EmptyName,
    #[error("unknown part {0}")]
    UnknownPart(Box<PartIdentity>),
    #[error("tree line {line}: {reason}")]
    BadTreeLine { line: usize, reason: String },
    #[error("inconsistent tree: {0}")]
    InconsistentTree(String),
}

/// The global identity of a part: where it sits in the SFI tree, what it is
/// called, and who produces it. Equality is exact on all three attributes.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PartIdentity {
    pub sfi: PartCode,
    pub name: String,
    pub supplier_id: OrgId,
}

impl PartIdentity {
    pub fn new(
        sfi: impl Into<PartCode>,
        name: impl Into<String>,
        supplier_id: impl Into<OrgId>,
    ) -> Result<Self, SfiError> {
        let name = name.into();
        if name.is_empty() {
            return Err(SfiError::EmptyName);
        }
        Ok(Self {
            sfi: sfi.into(),
            name,
            supplier_id: supplier_id.into(),
        })
    }

    /// Convenience constructor from the textual code form.
    pub fn parse(code: &str, name: &str, supplier_id: &str) -> Result<Self, SfiError> {
        Self::new(code.parse::<PartCode>()?, name, supplier_id)
    }

    pub fn path(&self) -> SfiPath {
        self.sfi.path()
    }
}

impl fmt::Display for PartIdentity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {:?} @{}", self.sfi, self.name, self.supplier_id)
    }
}

/// Two parts are the same part iff code, name and supplier all agree.
/// Names compare byte for byte; no case folding or trimming.
pub fn match_identity(a: &PartIdentity, b: &PartIdentity) -> bool {
    a.sfi == b.sfi && a.name.as_bytes() == b.name.as_bytes() && a.supplier_id == b.supplier_id
}
