use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::access::AccessError;
use crate::flow::FlowError;
use crate::partner::PartnerError;
use crate::parts::PartsError;
use crate::sfi::SfiError;
use crate::ship::ShipError;
use crate::store::StoreError;
use crate::sync::SyncError;

/// Coarse error class, used for HTTP statuses and CLI exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorKind {
    Forbidden,
    NotFound,
    Conflict,
    Invalid,
    Internal,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum HubError {
    #[error("{0}")]
    Forbidden(String),
    #[error("{0}")]
    NotFound(String),
    #[error("{0}")]
    Conflict(String),
    #[error("{0}")]
    Invalid(String),
    #[error("the hub runs on the real clock; clock commands are refused")]
    ClockIsReal,
    #[error("the clock cannot move back from {today} to {to}")]
    ClockBackwards { today: NaiveDate, to: NaiveDate },
    #[error("journal: {0}")]
    Journal(String),
    #[error("I/O: {0}")]
    Io(String),
}

impl HubError {
    pub fn kind(&self) -> ErrorKind {
        match self {
            HubError::Forbidden(_) | HubError::ClockIsReal => ErrorKind::Forbidden,
            HubError::NotFound(_) => ErrorKind::NotFound,
            HubError::Conflict(_) | HubError::ClockBackwards { .. } => ErrorKind::Conflict,
            HubError::Invalid(_) => ErrorKind::Invalid,
            HubError::Journal(_) | HubError::Io(_) => ErrorKind::Internal,
        }
    }
}

impl From<std::io::Error> for HubError {
    fn from(e: std::io::Error) -> Self {
        HubError::Io(e.to_string())
    }
}

impl From<AccessError> for HubError {
    fn from(e: AccessError) -> Self {
        match e {
            AccessError::Unauthorized { .. } => HubError::Forbidden(e.to_string()),
            AccessError::UnknownLevel(_) => HubError::Invalid(e.to_string()),
        }
    }
}

impl From<SfiError> for HubError {
    fn from(e: SfiError) -> Self {
        match e {
            SfiError::DuplicateNameInSubtree { .. } => HubError::Conflict(e.to_string()),
            SfiError::UnknownPart(_) => HubError::NotFound(e.to_string()),
            _ => HubError::Invalid(e.to_string()),
        }
    }
}

impl From<StoreError> for HubError {
    fn from(e: StoreError) -> Self {
        match e {
            StoreError::Unauthorized(a) => a.into(),
            StoreError::UnknownDocument(_)
            | StoreError::UnknownVersion(..)
            | StoreError::MissingBlob(_) => HubError::NotFound(e.to_string()),
            StoreError::EmptyContent | StoreError::EmptyName | StoreError::BadHash(_) => {
                HubError::Invalid(e.to_string())
            }
            StoreError::Io(_) => HubError::Io(e.to_string()),
        }
    }
}

impl From<ShipError> for HubError {
    fn from(e: ShipError) -> Self {
        match e {
            ShipError::UnknownShipType(_) | ShipError::UnknownShip(_) => {
                HubError::NotFound(e.to_string())
            }
            ShipError::DuplicateName(_) | ShipError::DuplicateId(_) => {
                HubError::Conflict(e.to_string())
            }
            ShipError::EmptyName => HubError::Invalid(e.to_string()),
            ShipError::Tree(t) => t.into(),
        }
    }
}

impl From<PartsError> for HubError {
    fn from(e: PartsError) -> Self {
        match e {
            PartsError::UnknownDraft(_) | PartsError::UnknownDesign(_) => {
                HubError::NotFound(e.to_string())
            }
            PartsError::AttributeAlreadySet { .. }
            | PartsError::Superseded(..)
            | PartsError::DuplicateId(_) => HubError::Conflict(e.to_string()),
            PartsError::ShipMismatch { .. }
            | PartsError::UnknownAttribute(_)
            | PartsError::EmptyValue(_) => HubError::Invalid(e.to_string()),
            PartsError::Code(c) => c.into(),
        }
    }
}

impl From<FlowError> for HubError {
    fn from(e: FlowError) -> Self {
        match e {
            FlowError::UnknownDraft(..)
            | FlowError::UnknownDesign(..)
            | FlowError::UnknownPlan(_)
            | FlowError::NotGenerated(_) => HubError::NotFound(e.to_string()),
            FlowError::DuplicatePlan(_) => HubError::Conflict(e.to_string()),
            _ => HubError::Invalid(e.to_string()),
        }
    }
}

impl From<PartnerError> for HubError {
    fn from(e: PartnerError) -> Self {
        match e {
            PartnerError::UnknownSubject(_) | PartnerError::UnknownThread(_) => {
                HubError::NotFound(e.to_string())
            }
            PartnerError::NotParticipant { .. } => HubError::Forbidden(e.to_string()),
            PartnerError::EmptyBody => HubError::Invalid(e.to_string()),
        }
    }
}

impl From<SyncError> for HubError {
    fn from(e: SyncError) -> Self {
        match e {
            SyncError::Store(s) => s.into(),
            SyncError::Tree(t) => t.into(),
            _ => HubError::Invalid(e.to_string()),
        }
    }
}
