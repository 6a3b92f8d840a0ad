//! Optional TOML settings file, the lowest-precedence configuration layer.
//! Flags and `OTFORGE_*` environment variables override it.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Settings {
    pub db: Option<PathBuf>,
    pub store: Option<PathBuf>,
    pub bridges: Option<PathBuf>,
    pub host: Option<String>,
    pub port: Option<u16>,
    pub jobs: Option<usize>,
    pub row_cap: Option<usize>,
    pub timeout_ms: Option<u64>,
    pub lease_ttl_secs: Option<i64>,
    pub token_assignment: Option<bool>,
    pub segment_length: Option<usize>,
}

impl Settings {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(Settings::default());
        };
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        toml::from_str(&text)
            .map_err(|e| CliError::new("config", format!("{}: {e}", path.display())))
    }
}
