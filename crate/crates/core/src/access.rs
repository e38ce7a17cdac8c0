//! Location-scoped grants with downward inheritance.
//!
//! A grant `(org, scope, level)` covers `scope` and every folder below it.
//! Levels are ordered `Read < Upload < Admin`; holding a level implies every
//! lower one. There are no deny rules, so the decision function is the union
//! of all grants and is monotone in both depth and level.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ids::OrgId;
use crate::sfi::{PartIdentity, SfiPath};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Level {
    Read,
    Upload,
    Admin,
}

impl Level {
    pub const ALL: [Level; 3] = [Level::Read, Level::Upload, Level::Admin];
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Level::Read => "read",
            Level::Upload => "upload",
            Level::Admin => "admin",
        })
    }
}

impl FromStr for Level {
    type Err = AccessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "read" => Ok(Level::Read),
            "upload" => Ok(Level::Upload),
            "admin" => Ok(Level::Admin),
            _ => Err(AccessError::UnknownLevel(s.to_owned())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AccessError {
    #[error("{principal} lacks {level} access at {location}")]
    Unauthorized {
        principal: OrgId,
        location: SfiPath,
        level: Level,
    },
    #[error("unknown access level {0:?}")]
    UnknownLevel(String),
}

impl AccessError {
    pub fn unauthorized(principal: &OrgId, location: SfiPath, level: Level) -> Self {
        AccessError::Unauthorized {
            principal: principal.clone(),
            location,
            level,
        }
    }
}

/// Journal form of a grant.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AccessGrant {
    pub principal: OrgId,
    pub scope: SfiPath,
    pub level: Level,
    pub granted_by: OrgId,
    pub granted_at: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
struct GrantMeta {
    granted_by: OrgId,
    granted_at: DateTime<Utc>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GrantOutcome {
    Added,
    Unchanged,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GrantSet {
    #[serde(with = "crate::serde_util::pairs")]
    grants: BTreeMap<(OrgId, SfiPath, Level), GrantMeta>,
}

impl GrantSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// A fresh project: the creating organization holds Admin at the root.
    pub fn bootstrap(owner: &OrgId, at: DateTime<Utc>) -> Self {
        let mut set = Self::new();
        set.grants.insert(
            (owner.clone(), SfiPath::root(), Level::Admin),
            GrantMeta {
                granted_by: owner.clone(),
                granted_at: at,
            },
        );
        set
    }

    /// Records a grant. The granting organization must hold Admin at `scope`.
    /// Granting something that is already recorded changes nothing.
    pub fn grant(
        &mut self,
        principal: &OrgId,
        scope: SfiPath,
        level: Level,
        granted_by: &OrgId,
        at: DateTime<Utc>,
    ) -> Result<GrantOutcome, AccessError> {
        if !self.check(granted_by, &scope, Level::Admin) {
            return Err(AccessError::unauthorized(granted_by, scope, Level::Admin));
        }
        let key = (principal.clone(), scope, level);
        if self.grants.contains_key(&key) {
            return Ok(GrantOutcome::Unchanged);
        }
        self.grants.insert(
            key,
            GrantMeta {
                granted_by: granted_by.clone(),
                granted_at: at,
            },
        );
        Ok(GrantOutcome::Added)
    }

    /// Removes exactly one grant. Returns whether it existed.
    pub fn revoke(
        &mut self,
        principal: &OrgId,
        scope: SfiPath,
        level: Level,
        actor: &OrgId,
    ) -> Result<bool, AccessError> {
        if !self.check(actor, &scope, Level::Admin) {
            return Err(AccessError::unauthorized(actor, scope, Level::Admin));
        }
        Ok(self
            .grants
            .remove(&(principal.clone(), scope, level))
            .is_some())
    }

    /// True iff some grant for `principal` at `location` or an ancestor has
    /// at least `level`.
    pub fn check(&self, principal: &OrgId, location: &SfiPath, level: Level) -> bool {
        location.ancestors_or_self().any(|scope| {
            Level::ALL
                .iter()
                .filter(|held| **held >= level)
                .any(|held| {
                    self.grants
                        .contains_key(&(principal.clone(), scope, *held))
                })
        })
    }

    /// Access to a part's documents: the grant rule above, plus the part's
    /// own supplier, who may always read and upload its documentation.
    pub fn check_part(&self, principal: &OrgId, part: &PartIdentity, level: Level) -> bool {
        (level <= Level::Upload && part.supplier_id == *principal)
            || self.check(principal, &part.path(), level)
    }

    pub fn require(
        &self,
        principal: &OrgId,
        location: &SfiPath,
        level: Level,
    ) -> Result<(), AccessError> {
        if self.check(principal, location, level) {
            Ok(())
        } else {
            Err(AccessError::unauthorized(principal, *location, level))
        }
    }

    pub fn require_part(
        &self,
        principal: &OrgId,
        part: &PartIdentity,
        level: Level,
    ) -> Result<(), AccessError> {
        if self.check_part(principal, part, level) {
            Ok(())
        } else {
            Err(AccessError::unauthorized(principal, part.path(), level))
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = AccessGrant> + '_ {
        self.grants
            .iter()
            .map(|((principal, scope, level), meta)| AccessGrant {
                principal: principal.clone(),
                scope: *scope,
                level: *level,
                granted_by: meta.granted_by.clone(),
                granted_at: meta.granted_at,
            })
    }

    pub fn len(&self) -> usize {
        self.grants.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grants.is_empty()
    }

    /// Every organization named in a grant, as holder or grantor.
    pub fn organizations(&self) -> BTreeSet<OrgId> {
        self.grants
            .iter()
            .flat_map(|((p, _, _), meta)| [p.clone(), meta.granted_by.clone()])
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn org(s: &str) -> OrgId {
        OrgId::new(s)
    }

    fn path(s: &str) -> SfiPath {
        s.parse().unwrap()
    }

    fn at() -> DateTime<Utc> {
        DateTime::UNIX_EPOCH
    }

    #[test]
    fn owner_grant_flows_downwards() {
        let owner = org("YARD");
        let mut set = GrantSet::bootstrap(&owner, at());
        set.grant(&org("SUP-A"), path("36"), Level::Read, &owner, at())
            .unwrap();
        assert!(set.check(&org("SUP-A"), &path("362"), Level::Read));
        assert!(set.check(&org("SUP-A"), &path("36"), Level::Read));
        assert!(!set.check(&org("SUP-A"), &path("3"), Level::Read));
        assert!(!set.check(&org("SUP-A"), &path("371"), Level::Read));
        assert!(!set.check(&org("SUP-A"), &path("362"), Level::Upload));
    }

    #[test]
    fn duplicate_grant_is_unchanged() {
        let owner = org("YARD");
        let mut set = GrantSet::bootstrap(&owner, at());
        set.grant(&org("SUP-A"), path("36"), Level::Read, &owner, at())
            .unwrap();
        let before = set.clone();
        assert_eq!(
            set.grant(&org("SUP-A"), path("36"), Level::Read, &owner, at()),
            Ok(GrantOutcome::Unchanged)
        );
        assert_eq!(set, before);
    }

    #[test]
    fn readers_cannot_grant() {
        let owner = org("YARD");
        let mut set = GrantSet::bootstrap(&owner, at());
        set.grant(&org("SUP-A"), path("36"), Level::Read, &owner, at())
            .unwrap();
        assert!(matches!(
            set.grant(&org("SUP-B"), path("362"), Level::Read, &org("SUP-A"), at()),
            Err(AccessError::Unauthorized { .. })
        ));
    }

    #[test]
    fn no_grants_means_no_access() {
        let set = GrantSet::new();
        for loc in ["/", "3", "36", "362"] {
            for level in Level::ALL {
                assert!(!set.check(&org("X"), &path(loc), level));
            }
        }
    }

    #[test]
    fn suppliers_reach_their_own_parts() {
        let set = GrantSet::new();
        let part = PartIdentity::parse("362.003", "COOL-X", "SUP-A").unwrap();
        assert!(set.check_part(&org("SUP-A"), &part, Level::Upload));
        assert!(!set.check_part(&org("SUP-A"), &part, Level::Admin));
        assert!(!set.check_part(&org("SUP-B"), &part, Level::Read));
    }

    fn arb_path() -> impl Strategy<Value = SfiPath> {
        prop::collection::vec(0u8..3, 0..=3).prop_map(|d| SfiPath::from_digits(&d).unwrap())
    }

    fn arb_level() -> impl Strategy<Value = Level> {
        prop::sample::select(Level::ALL.to_vec())
    }

    fn arb_grants() -> impl Strategy<Value = Vec<(u8, SfiPath, Level)>> {
        prop::collection::vec((0u8..3, arb_path(), arb_level()), 0..8)
    }

    fn build(grants: &[(u8, SfiPath, Level)]) -> GrantSet {
        let root = org("ROOT");
        let mut set = GrantSet::bootstrap(&root, at());
        for (p, scope, level) in grants {
            set.grant(&org(&format!("O{p}")), *scope, *level, &root, at())
                .unwrap();
        }
        set
    }

    proptest! {
        #[test]
        fn revocation_leaves_no_residue(grants in arb_grants(), extra in (0u8..3, arb_path(), arb_level())) {
            let set = build(&grants);
            let mut widened = set.clone();
            let root = org("ROOT");
            let principal = org(&format!("O{}", extra.0));
            let outcome = widened.grant(&principal, extra.1, extra.2, &root, at()).unwrap();
            if outcome == GrantOutcome::Added {
                widened.revoke(&principal, extra.1, extra.2, &root).unwrap();
            }
            prop_assert_eq!(&widened, &set);
            for p in 0..3u8 {
                for digits in [vec![], vec![0], vec![1, 2], vec![2, 0, 1]] {
                    let loc = SfiPath::from_digits(&digits).unwrap();
                    for level in Level::ALL {
                        let o = org(&format!("O{p}"));
                        prop_assert_eq!(widened.check(&o, &loc, level), set.check(&o, &loc, level));
                    }
                }
            }
        }

        #[test]
        fn monotone_in_level(grants in arb_grants(), p in 0u8..3, loc in arb_path()) {
            let set = build(&grants);
            let o = org(&format!("O{p}"));
            if set.check(&o, &loc, Level::Admin) {
                prop_assert!(set.check(&o, &loc, Level::Upload));
            }
            if set.check(&o, &loc, Level::Upload) {
                prop_assert!(set.check(&o, &loc, Level::Read));
            }
        }
    }
}
