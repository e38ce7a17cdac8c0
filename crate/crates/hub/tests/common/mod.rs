#![allow(dead_code)]

use std::time::Duration;

use chrono::NaiveDate;
use paperstack::hub::scenario::run_scenario;
use paperstack::hub::{Genesis, Hub};
use paperstack::sfi::PartIdentity;
use paperstack::store::DocumentId;
use paperstack_hub::{spawn, Running};

pub const SCRIPT: &str = include_str!("../../../core/scenarios/new_ship_project.toml");

/// A hub after the whole example project has run.
pub fn seeded() -> Hub {
    run_scenario(SCRIPT).unwrap().hub
}

/// A fresh hub with the example project's settings.
pub fn empty() -> Hub {
    Hub::in_memory(Genesis {
        lead_time_days: 7,
        ..Genesis::simulated("YARD", day(2026, 3, 2))
    })
}

pub fn serve(hub: Hub) -> Running {
    spawn(hub, "127.0.0.1:0", Duration::from_secs(3600)).unwrap()
}

pub fn day(y: i32, m: u32, d: u32) -> NaiveDate {
    NaiveDate::from_ymd_opt(y, m, d).unwrap()
}

pub fn evap_cert() -> DocumentId {
    DocumentId::new(
        PartIdentity::parse("362.010", "EVAP-2", "SUP-A").unwrap(),
        "test certificate",
    )
}
