//! Arena configuration, read from JSON or from `key = value` lines.
//!
//! ```text
//! # comments start with '#'
//! min_user_turns = 5
//! environment = closed
//! storage_path = /var/lib/arena/events.jsonl
//! crs = stub_echo stub:echo
//! crs = KBRD_ReDial http://10.0.0.5:8000 60000
//! ```
//!
//! A `crs` line is `crs_id endpoint [timeout_ms]`.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::time::Duration;

use arena_core::{CrsDescriptor, CrsId, Environment};
use arena_gateway::{register_stub, StubKind, DEFAULT_TIMEOUT};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config: {0}")]
    Io(#[from] std::io::Error),
    #[error("config line {line}: {message}")]
    Line { line: usize, message: String },
    #[error("invalid JSON config: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CrsEntry {
    pub crs_id: String,
    pub endpoint: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub display_name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timeout_ms: Option<u64>,
}

impl CrsEntry {
    pub fn stub(kind: StubKind) -> Self {
        let d = register_stub(kind);
        Self {
            crs_id: d.crs_id.0,
            endpoint: d.endpoint,
            display_name: Some(d.display_name),
            timeout_ms: None,
        }
    }

    pub fn descriptor(&self) -> CrsDescriptor {
        let mut d = CrsDescriptor::new(self.crs_id.clone(), self.endpoint.clone());
        if let Some(name) = &self.display_name {
            d.display_name = name.clone();
        }
        d
    }

    pub fn timeout(&self) -> Duration {
        self.timeout_ms.map_or(DEFAULT_TIMEOUT, Duration::from_millis)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArenaConfig {
    /// User turns required before a conversation may be ended.
    #[serde(default)]
    pub min_user_turns: u32,
    #[serde(default)]
    pub environment: Environment,
    /// Event log location; `None` keeps the log in memory only.
    #[serde(default)]
    pub storage_path: Option<PathBuf>,
    pub crs: Vec<CrsEntry>,
}

impl ArenaConfig {
    /// Three stub CRSs, open environment, in-memory log.
    pub fn with_stubs() -> Self {
        Self {
            min_user_turns: 0,
            environment: Environment::Open,
            storage_path: None,
            crs: StubKind::ALL.into_iter().map(CrsEntry::stub).collect(),
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// JSON when the text starts with `{`, `key = value` lines otherwise.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let config = if text.trim_start().starts_with('{') {
            serde_json::from_str(text)?
        } else {
            Self::parse_lines(text)?
        };
        config.validate()?;
        Ok(config)
    }

    fn parse_lines(text: &str) -> Result<Self, ConfigError> {
        let mut config = Self {
            min_user_turns: 0,
            environment: Environment::Open,
            storage_path: None,
            crs: Vec::new(),
        };
        for (index, raw) in text.lines().enumerate() {
            let line = index + 1;
            let err = |message: String| ConfigError::Line { line, message };
            // `#` starts a comment at line start or after whitespace
            let content = match raw.find(" #").or_else(|| raw.find("\t#")) {
                Some(at) => &raw[..at],
                None => raw,
            }
            .trim();
            if content.is_empty() || content.starts_with('#') {
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| err("expected key = value".into()))?;
            let value = value.trim();
            match key.trim() {
                "min_user_turns" => {
                    config.min_user_turns =
                        value.parse().map_err(|_| err(format!("bad min_user_turns {value:?}")))?
                }
                "environment" => {
                    config.environment = value.parse().map_err(|e| err(format!("{e}")))?
                }
                "storage_path" => config.storage_path = Some(PathBuf::from(value)),
                "crs" => {
                    let parts: Vec<&str> = value.split_whitespace().collect();
                    let (crs_id, endpoint, timeout_ms) = match parts.as_slice() {
                        [id, ep] => (*id, *ep, None),
                        [id, ep, t] => {
                            let t = t.parse().map_err(|_| err(format!("bad timeout_ms {t:?}")))?;
                            (*id, *ep, Some(t))
                        }
                        _ => return Err(err("expected crs = <crs_id> <endpoint> [timeout_ms]".into())),
                    };
                    config.crs.push(CrsEntry {
                        crs_id: crs_id.into(),
                        endpoint: endpoint.into(),
                        display_name: None,
                        timeout_ms,
                    });
                }
                other => return Err(err(format!("unknown key {other:?}"))),
            }
        }
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.crs.len() < 2 {
            return Err(ConfigError::Invalid(format!(
                "at least 2 CRSs are required, found {}",
                self.crs.len()
            )));
        }
        let mut seen = BTreeSet::new();
        for entry in &self.crs {
            if entry.crs_id.trim().is_empty() {
                return Err(ConfigError::Invalid("empty crs_id".into()));
            }
            if !seen.insert(entry.crs_id.as_str()) {
                return Err(ConfigError::Invalid(format!("duplicate crs_id {}", entry.crs_id)));
            }
            if entry.timeout_ms == Some(0) {
                return Err(ConfigError::Invalid(format!("{}: timeout_ms must be positive", entry.crs_id)));
            }
            if let Some(kind) = entry.endpoint.strip_prefix("stub:") {
                kind.parse::<StubKind>().map_err(ConfigError::Invalid)?;
            }
        }
        Ok(())
    }

    pub fn entry(&self, id: &CrsId) -> Option<&CrsEntry> {
        self.crs.iter().find(|e| e.crs_id == id.0)
    }
}
