use std::path::Path;

use serde::Deserialize;

use crate::ConfigError;

/// Optional defaults read from `--config`. Flags and environment override
/// every field.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub seed: Option<u64>,
    pub scorer: Option<String>,
    pub batch_size: Option<usize>,
    pub parallel: Option<usize>,
    pub timeout_secs: Option<u64>,
    pub tie_policy: Option<String>,
    pub max_pairs: Option<usize>,
    pub content_pos: Option<Vec<String>>,
}

impl Config {
    pub fn load(path: Option<&Path>) -> Result<Self, ConfigError> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("config {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| ConfigError(format!("config {}: {e}", path.display())))
    }
}
