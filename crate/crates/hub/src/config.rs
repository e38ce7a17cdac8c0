//! Configuration file.
//!
//! ```toml
//! [client]
//! hub = "http://127.0.0.1:7878"
//! actor = "YARD"
//! output = "human"
//!
//! [server]
//! listen = "127.0.0.1:7878"
//! data_dir = "paperstack-data"
//! owner = "YARD"
//! clock = "simulated"
//! start = "2026-03-02"
//! lead_time_days = 14
//! poll_interval_secs = 60
//! ```
//!
//! Command-line flags override environment variables, which override the
//! file, which overrides the defaults.

use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::Deserialize;
use thiserror::Error;

pub const DEFAULT_FILE: &str = "paperstack.toml";
pub const DEFAULT_HUB: &str = "http://127.0.0.1:7878";
pub const DEFAULT_LISTEN: &str = "127.0.0.1:7878";

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("bad config file {path}: {source}")]
    Parse {
        path: PathBuf,
        source: toml::de::Error,
    },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum OutputMode {
    #[default]
    Human,
    /// One JSON record per line.
    Records,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum ClockMode {
    #[default]
    Real,
    Simulated,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Deserialize)]
#[serde(default)]
pub struct ClientSection {
    pub hub: Option<String>,
    pub actor: Option<String>,
    pub output: Option<OutputMode>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Deserialize)]
#[serde(default)]
pub struct ServerSection {
    pub listen: Option<String>,
    pub data_dir: Option<PathBuf>,
    pub project: Option<String>,
    pub owner: Option<String>,
    pub clock: Option<ClockMode>,
    pub start: Option<NaiveDate>,
    pub lead_time_days: Option<i64>,
    pub poll_interval_secs: Option<u64>,
    pub snapshot_every: Option<u64>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Deserialize)]
#[serde(default)]
pub struct ConfigFile {
    pub client: ClientSection,
    pub server: ServerSection,
}

impl ConfigFile {
    /// Reads `path`, or `paperstack.toml` in the working directory if it
    /// exists. No file at all is an empty configuration.
    pub fn load(path: Option<&Path>) -> Result<Self, ConfigError> {
        let path = match path {
            Some(p) => p.to_path_buf(),
            None if Path::new(DEFAULT_FILE).exists() => PathBuf::from(DEFAULT_FILE),
            None => return Ok(Self::default()),
        };
        let text = std::fs::read_to_string(&path).map_err(|source| ConfigError::Read {
            path: path.clone(),
            source,
        })?;
        toml::from_str(&text).map_err(|source| ConfigError::Parse { path, source })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sections_are_optional() {
        let file: ConfigFile = toml::from_str("[client]\nactor = \"SUP-A\"\n").unwrap();
        assert_eq!(file.client.actor.as_deref(), Some("SUP-A"));
        assert_eq!(file.server, ServerSection::default());
    }

    #[test]
    fn server_section_parses() {
        let file: ConfigFile = toml::from_str(
            "[server]\nclock = \"simulated\"\nstart = \"2026-03-02\"\nlead_time_days = 7\n",
        )
        .unwrap();
        assert_eq!(file.server.clock, Some(ClockMode::Simulated));
        assert_eq!(file.server.lead_time_days, Some(7));
    }

    #[test]
    fn missing_explicit_file_is_an_error() {
        assert!(matches!(
            ConfigFile::load(Some(Path::new("/nonexistent/paperstack.toml"))),
            Err(ConfigError::Read { .. })
        ));
    }
}
