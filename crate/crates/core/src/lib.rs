//! Paperstack: an SFI-classified documentation sharing hub for ship
//! construction projects.

pub mod access;
pub mod flow;
pub mod hub;
pub mod ids;
pub mod partner;
pub mod parts;
pub mod sfi;
pub mod ship;
pub mod store;
pub mod sync;

mod serde_util;
