use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::occupancy::TrackerConfig;

pub const ENV_LISTEN: &str = "PARKWISE_LISTEN";
pub const ENV_REGISTRY: &str = "PARKWISE_REGISTRY";
pub const ENV_LOG: &str = "PARKWISE_LOG";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServiceConfig {
    pub listen: String,
    /// `None` uses the built-in Johannesburg registry.
    pub registry_path: Option<PathBuf>,
    pub log_path: PathBuf,
    pub tracker: TrackerConfig,
    /// Applied events between checkpoints.
    pub snapshot_interval: usize,
    /// In-flight ingests allowed per camera before answering 503.
    pub queue_depth: usize,
    pub fsync: bool,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            listen: "127.0.0.1:8080".into(),
            registry_path: None,
            log_path: PathBuf::from("parkwise-events.log"),
            tracker: TrackerConfig::default(),
            snapshot_interval: 1000,
            queue_depth: 1024,
            fsync: true,
        }
    }
}

/// Values given on the command line or through the environment.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub listen: Option<String>,
    pub registry_path: Option<PathBuf>,
    pub log_path: Option<PathBuf>,
}

impl ServiceConfig {
    /// Reads a TOML file (`.toml`) or a JSON file (anything else).
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        let cfg: ServiceConfig = if path.extension().is_some_and(|e| e == "toml") {
            toml::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))?
        } else {
            serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))?
        };
        Ok(cfg)
    }

    /// Layers `flags` over `env` over `self`.
    pub fn with_overrides(mut self, flags: &Overrides, env: &Overrides) -> Self {
        if let Some(v) = flags.listen.clone().or_else(|| env.listen.clone()) {
            self.listen = v;
        }
        if let Some(v) = flags.registry_path.clone().or_else(|| env.registry_path.clone()) {
            self.registry_path = Some(v);
        }
        if let Some(v) = flags.log_path.clone().or_else(|| env.log_path.clone()) {
            self.log_path = v;
        }
        self
    }

    pub fn validate(&self) -> Result<(), String> {
        self.tracker.validate().map_err(|e| e.to_string())?;
        if self.snapshot_interval == 0 {
            return Err("snapshot_interval must be at least 1".into());
        }
        if self.queue_depth == 0 {
            return Err("queue_depth must be at least 1".into());
        }
        Ok(())
    }
}

impl Overrides {
    pub fn from_env() -> Self {
        Overrides {
            listen: std::env::var(ENV_LISTEN).ok(),
            registry_path: std::env::var_os(ENV_REGISTRY).map(PathBuf::from),
            log_path: std::env::var_os(ENV_LOG).map(PathBuf::from),
        }
    }
}
