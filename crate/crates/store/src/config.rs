//! Indicator settings from TOML files.

use std::path::Path;

use interest_core::indicators::{ConfigError, IndicatorConfig};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LoadConfigError {
    #[error("reading {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("parsing config: {0}")]
    Toml(#[from] toml::de::Error),
    #[error(transparent)]
    Invalid(#[from] ConfigError),
}

/// Keys left out keep their defaults; unknown keys are rejected.
pub fn parse_config(text: &str) -> Result<IndicatorConfig, LoadConfigError> {
    let config: IndicatorConfig = toml::from_str(text)?;
    config.validate()?;
    Ok(config)
}

pub fn load_config(path: Option<&Path>) -> Result<IndicatorConfig, LoadConfigError> {
    let Some(path) = path else {
        return Ok(IndicatorConfig::default());
    };
    let text = std::fs::read_to_string(path).map_err(|source| LoadConfigError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_config(&text)
}
