//! Text-generation backends and their configuration.

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::mock::MockBackend;
use super::remote::RemoteBackend;
use super::{AgentRole, Identity};
use crate::corpus::{Chunk, Corpus};
use crate::model::{Code, ScoreVector, ThemeSet};
use crate::refine::HeuristicRules;

/// Environment variable holding the remote backend's credentials.
pub const API_KEY_ENV: &str = "AUTO_TA_API_KEY";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BackendError {
    #[error("backend unavailable: {0}")]
    Unavailable(String),
    #[error("backend returned HTTP {status}: {body}")]
    Http { status: u16, body: String },
    #[error("malformed backend reply: {0}")]
    Protocol(String),
    #[error("no recorded response for {role:?} {identity:?} {reference}")]
    ReplayMissing {
        role: AgentRole,
        identity: Option<String>,
        reference: String,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: String,
    pub content: String,
}

impl ChatMessage {
    pub fn user(content: impl Into<String>) -> Self {
        Self {
            role: "user".into(),
            content: content.into(),
        }
    }
}

/// Structured inputs behind a prompt. Remote backends only see the rendered
/// messages; the mock backend works from these directly.
#[derive(Debug, Clone, Copy)]
pub enum Task<'a> {
    Code {
        chunk: &'a Chunk,
    },
    Themes {
        codes: &'a [Code],
    },
    Revise {
        themes: &'a ThemeSet,
    },
    Critique {
        themes: &'a ThemeSet,
        scores: &'a ScoreVector,
        corpus: &'a Corpus,
        rules: &'a HeuristicRules,
    },
}

#[derive(Debug, Clone)]
pub struct AgentRequest<'a> {
    pub role: AgentRole,
    pub identity: Option<&'a Identity>,
    /// Stable name of this call within the run, e.g. `main/code/int-1#0`.
    pub reference: String,
    pub messages: Vec<ChatMessage>,
    pub model: String,
    pub temperature: f64,
    pub seed: u64,
    pub task: Task<'a>,
}

impl AgentRequest<'_> {
    pub fn prompt_text(&self) -> String {
        self.messages
            .iter()
            .map(|m| m.content.as_str())
            .collect::<Vec<_>>()
            .join("\n\n")
    }
}

/// A text-generation backend. Implementations must be shareable across the
/// threads that run coder agents concurrently.
pub trait Backend: Send + Sync {
    fn name(&self) -> &str;

    fn complete(&self, request: &AgentRequest<'_>) -> Result<String, BackendError>;

    /// Whether identical requests always yield identical responses. Wall
    /// clock timestamps are only recorded for non-deterministic backends.
    fn is_deterministic(&self) -> bool {
        true
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    #[default]
    Mock,
    Remote,
}

impl std::str::FromStr for BackendKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "mock" => Ok(BackendKind::Mock),
            "remote" => Ok(BackendKind::Remote),
            other => Err(format!("unknown backend {other:?} (expected mock or remote)")),
        }
    }
}

fn default_model() -> String {
    "mock".into()
}

fn default_key_env() -> String {
    API_KEY_ENV.into()
}

fn default_timeout() -> u64 {
    120
}

fn default_top_n() -> usize {
    super::mock::DEFAULT_TOP_N
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackendConfig {
    #[serde(default)]
    pub kind: BackendKind,
    #[serde(default = "default_model")]
    pub model: String,
    #[serde(default)]
    pub temperature: f64,
    #[serde(default)]
    pub endpoint: Option<String>,
    #[serde(default = "default_key_env")]
    pub api_key_env: String,
    #[serde(default = "default_timeout")]
    pub timeout_secs: u64,
    /// Codes emitted per chunk by the mock backend.
    #[serde(default = "default_top_n")]
    pub mock_top_n: usize,
}

impl Default for BackendConfig {
    fn default() -> Self {
        Self {
            kind: BackendKind::Mock,
            model: default_model(),
            temperature: 0.0,
            endpoint: None,
            api_key_env: default_key_env(),
            timeout_secs: default_timeout(),
            mock_top_n: default_top_n(),
        }
    }
}

impl BackendConfig {
    pub fn build(&self) -> Result<Arc<dyn Backend>, BackendError> {
        match self.kind {
            BackendKind::Mock => Ok(Arc::new(MockBackend::new(self.mock_top_n))),
            BackendKind::Remote => {
                let endpoint = self.endpoint.clone().ok_or_else(|| {
                    BackendError::Unavailable("remote backend needs an endpoint".into())
                })?;
                let key = std::env::var(&self.api_key_env).map_err(|_| {
                    BackendError::Unavailable(format!("{} is not set", self.api_key_env))
                })?;
                Ok(Arc::new(RemoteBackend::new(endpoint, key, self.timeout_secs)?))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults() {
        let c = BackendConfig::default();
        assert_eq!(c.temperature, 0.0);
        assert_eq!(c.kind, BackendKind::Mock);
        let parsed: BackendConfig = serde_json::from_str("{}").unwrap();
        assert_eq!(parsed, c);
    }

    #[test]
    fn remote_without_endpoint_is_unavailable() {
        let c = BackendConfig {
            kind: BackendKind::Remote,
            ..Default::default()
        };
        assert!(matches!(c.build(), Err(BackendError::Unavailable(_))));
    }
}
