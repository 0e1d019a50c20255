//! Backend that answers from a recorded audit trail.

use std::collections::HashMap;

use super::backend::{AgentRequest, Backend, BackendError};
use super::{AgentExchange, AgentRole};
use crate::model::AuditTrail;

type Key = (AgentRole, Option<String>, String);

/// Replays recorded responses keyed by role, identity and reference, so a
/// rerun with the same configuration reproduces the recorded run exactly.
#[derive(Debug, Clone, Default)]
pub struct ReplayBackend {
    responses: HashMap<Key, String>,
}

impl ReplayBackend {
    pub fn from_exchanges<'a>(exchanges: impl IntoIterator<Item = &'a AgentExchange>) -> Self {
        let responses = exchanges
            .into_iter()
            .map(|e| ((e.role, e.identity.clone(), e.reference.clone()), e.response.clone()))
            .collect();
        Self { responses }
    }

    pub fn from_trail(trail: &AuditTrail) -> Self {
        Self::from_exchanges(trail.all_exchanges())
    }

    pub fn len(&self) -> usize {
        self.responses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.responses.is_empty()
    }
}

impl Backend for ReplayBackend {
    fn name(&self) -> &str {
        "replay"
    }

    fn complete(&self, request: &AgentRequest<'_>) -> Result<String, BackendError> {
        let identity = request.identity.map(|i| i.name.clone());
        let key = (request.role, identity, request.reference.clone());
        self.responses.get(&key).cloned().ok_or(BackendError::ReplayMissing {
            role: key.0,
            identity: key.1,
            reference: key.2,
        })
    }
}
