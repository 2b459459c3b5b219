use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::session::WarningPolicy;
use crate::ServiceError;

/// Service settings: a TOML file, then `JAWPRINT_*` environment overrides.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ServiceConfig {
    pub port: u16,
    pub model_dir: PathBuf,
    pub policy: WarningPolicy,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig { port: 8080, model_dir: PathBuf::from("models"), policy: WarningPolicy::default() }
    }
}

pub const ENV_PORT: &str = "JAWPRINT_PORT";
pub const ENV_MODEL_DIR: &str = "JAWPRINT_MODEL_DIR";
pub const ENV_WARN_CONSECUTIVE: &str = "JAWPRINT_WARN_CONSECUTIVE";
pub const ENV_WARN_RATE: &str = "JAWPRINT_WARN_RATE";
pub const ENV_WARN_RATE_WINDOW: &str = "JAWPRINT_WARN_RATE_WINDOW";

impl ServiceConfig {
    pub fn from_toml(text: &str) -> Result<Self, ServiceError> {
        toml::from_str(text).map_err(|e| ServiceError::InvalidConfig(e.to_string()))
    }

    pub fn load(path: Option<&Path>) -> Result<Self, ServiceError> {
        let mut cfg = match path {
            Some(p) => Self::from_toml(&std::fs::read_to_string(p)?)?,
            None => ServiceConfig::default(),
        };
        cfg.apply_env(|k| std::env::var(k).ok())?;
        Ok(cfg)
    }

    pub fn apply_env(&mut self, var: impl Fn(&str) -> Option<String>) -> Result<(), ServiceError> {
        fn parse<T: std::str::FromStr>(key: &str, v: String) -> Result<T, ServiceError> {
            v.trim().parse().map_err(|_| ServiceError::InvalidConfig(format!("{key}={v}")))
        }
        if let Some(v) = var(ENV_PORT) {
            self.port = parse(ENV_PORT, v)?;
        }
        if let Some(v) = var(ENV_MODEL_DIR) {
            self.model_dir = PathBuf::from(v);
        }
        if let Some(v) = var(ENV_WARN_CONSECUTIVE) {
            self.policy.consecutive_window_failures = parse(ENV_WARN_CONSECUTIVE, v)?;
        }
        if let Some(v) = var(ENV_WARN_RATE) {
            self.policy.failure_rate_threshold = parse(ENV_WARN_RATE, v)?;
        }
        if let Some(v) = var(ENV_WARN_RATE_WINDOW) {
            self.policy.failure_rate_window = parse(ENV_WARN_RATE_WINDOW, v)?;
        }
        self.policy.validate()
    }
}
