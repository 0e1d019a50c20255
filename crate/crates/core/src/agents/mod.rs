//! Role-conditioned agents over a pluggable text-generation backend.
//!
//! Every agent call renders a prompt, sends it to the backend, parses the
//! line-oriented reply and filters citations to the call's input scope.
//! Each call yields an [`AgentExchange`]; callers collect exchanges and
//! number them in a fixed order, so concurrent coding never changes the
//! recorded sequence.

pub mod backend;
pub mod mock;
pub mod prompt;
pub mod remote;
pub mod replay;
pub mod response;

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::sync::Arc;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use backend::{AgentRequest, Backend, BackendConfig, BackendError, BackendKind, ChatMessage, Task, API_KEY_ENV};
pub use mock::{MockBackend, DEFAULT_TOP_N};
pub use prompt::{PromptSet, PromptTemplate};
pub use remote::RemoteBackend;
pub use replay::ReplayBackend;
pub use response::{ParsedCode, ParsedEdit, ParsedTheme, ResponseError};

use crate::corpus::{Chunk, Corpus, QuoteId};
use crate::model::{Code, EditKind, EditProposal, ModelError, ScoreVector, ThemeDraft, ThemeSet};
use crate::refine::{heuristic_proposals, HeuristicRules};

pub const DEFAULT_IDENTITIES: [&str; 4] = [
    "Cardiac Surgeon",
    "Qualitative Researcher",
    "Medical Doctor",
    "Psychologist",
];

/// The perspective an agent is asked to adopt.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Identity {
    pub name: String,
    /// Text substituted for `{identity}`; may itself mention `{name}`.
    pub prompt_preamble: String,
}

impl Identity {
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into().trim().to_string(),
            prompt_preamble: "Approach the material as an experienced {name} would.".into(),
        }
    }

    pub fn preamble(&self) -> String {
        self.prompt_preamble.replace("{name}", &self.name)
    }
}

pub fn default_identities() -> Vec<Identity> {
    DEFAULT_IDENTITIES.iter().map(|n| Identity::new(*n)).collect()
}

/// Parses a comma-separated identity list.
pub fn parse_identities(list: &str) -> Result<Vec<Identity>, AgentError> {
    let ids: Vec<Identity> = list
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(Identity::new)
        .collect();
    check_identities(&ids)?;
    Ok(ids)
}

/// At least one identity, names non-empty and unique.
pub fn check_identities(ids: &[Identity]) -> Result<(), AgentError> {
    if ids.is_empty() {
        return Err(AgentError::InvalidIdentities("no coder identities configured".into()));
    }
    let mut seen = HashSet::new();
    for id in ids {
        if id.name.is_empty() {
            return Err(AgentError::InvalidIdentities("identity name is empty".into()));
        }
        if !seen.insert(id.name.as_str()) {
            return Err(AgentError::InvalidIdentities(format!("duplicate identity {:?}", id.name)));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgentRole {
    Coder,
    ThemeGenerator,
    ThemeReviser,
    Critic,
}

/// One recorded backend call.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgentExchange {
    /// Position within the run, assigned when the exchange is recorded.
    pub seq: u64,
    pub identity: Option<String>,
    pub role: AgentRole,
    /// Chunk or theme-set reference, e.g. `main/code/int-1#0`.
    pub reference: String,
    pub prompt: String,
    pub response: String,
    /// Unix milliseconds; only recorded for non-deterministic backends.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<u64>,
}

/// Assigns consecutive sequence numbers starting at `start`; returns the
/// next free number.
pub fn number_exchanges(exchanges: &mut [AgentExchange], start: u64) -> u64 {
    let mut seq = start;
    for e in exchanges {
        e.seq = seq;
        seq += 1;
    }
    seq
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AgentError {
    #[error("{reference}: {source}")]
    BackendUnavailable {
        reference: String,
        #[source]
        source: BackendError,
    },
    #[error("{reference}: unparseable response: {source}")]
    UnparseableResponse {
        reference: String,
        #[source]
        source: ResponseError,
    },
    #[error("{reference}: backend returned an empty response")]
    EmptyResponse { reference: String },
    #[error("no codes to group into themes")]
    NoCodes,
    #[error("invalid identities: {0}")]
    InvalidIdentities(String),
    #[error("scoring failed: {0}")]
    Scoring(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// A code dropped because it cited Quote IDs outside its chunk.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RejectedCode {
    pub code: ParsedCode,
    pub out_of_scope: Vec<QuoteId>,
}

/// What every agent call needs besides its inputs.
#[derive(Clone)]
pub struct AgentContext {
    pub backend: Arc<dyn Backend>,
    pub prompts: PromptSet,
    pub model: String,
    pub temperature: f64,
}

impl std::fmt::Debug for AgentContext {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("AgentContext")
            .field("backend", &self.backend.name())
            .field("model", &self.model)
            .field("temperature", &self.temperature)
            .finish()
    }
}

impl AgentContext {
    pub fn new(backend: Arc<dyn Backend>, config: &BackendConfig) -> Self {
        Self {
            backend,
            prompts: PromptSet::default(),
            model: config.model.clone(),
            temperature: config.temperature,
        }
    }

    pub fn mock() -> Self {
        Self::new(Arc::new(MockBackend::default()), &BackendConfig::default())
    }

    fn call(
        &self,
        role: AgentRole,
        identity: Option<&Identity>,
        reference: String,
        prompt: String,
        seed: u64,
        task: Task<'_>,
    ) -> Result<AgentExchange, AgentError> {
        let request = AgentRequest {
            role,
            identity,
            reference,
            messages: vec![ChatMessage::user(prompt)],
            model: self.model.clone(),
            temperature: self.temperature,
            seed,
            task,
        };
        let response = self
            .backend
            .complete(&request)
            .map_err(|source| AgentError::BackendUnavailable {
                reference: request.reference.clone(),
                source,
            })?;
        if response.trim().is_empty() {
            return Err(AgentError::EmptyResponse {
                reference: request.reference,
            });
        }
        let timestamp = (!self.backend.is_deterministic()).then(|| {
            SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_millis() as u64)
                .unwrap_or(0)
        });
        Ok(AgentExchange {
            seq: 0,
            identity: identity.map(|i| i.name.clone()),
            role,
            prompt: request.prompt_text(),
            reference: request.reference,
            response,
            timestamp,
        })
    }
}

fn unparseable(reference: &str, source: ResponseError) -> AgentError {
    AgentError::UnparseableResponse {
        reference: reference.to_string(),
        source,
    }
}

#[derive(Debug, Clone)]
pub struct CodingOutput {
    /// Codes sorted by label, duplicates merged.
    pub codes: Vec<Code>,
    pub rejected: Vec<RejectedCode>,
    pub exchange: AgentExchange,
}

/// Asks one coder identity for codes on one chunk.
pub fn code_chunk(
    ctx: &AgentContext,
    identity: &Identity,
    chunk: &Chunk,
    seed: u64,
    reference: String,
) -> Result<CodingOutput, AgentError> {
    let prompt = ctx.prompts.coder.render(&[
        ("identity", &identity.preamble()),
        ("transcript_chunk", &chunk.render()),
    ]);
    let exchange = ctx.call(AgentRole::Coder, Some(identity), reference, prompt, seed, Task::Code { chunk })?;
    let parsed = response::parse_code_response(&exchange.response).map_err(|e| unparseable(&exchange.reference, e))?;

    let mut merged: BTreeMap<String, (String, BTreeSet<QuoteId>)> = BTreeMap::new();
    let mut rejected = Vec::new();
    for code in parsed {
        let out_of_scope: Vec<QuoteId> = code.quote_ids.iter().copied().filter(|q| !chunk.contains(q)).collect();
        if !out_of_scope.is_empty() {
            log::warn!(
                "{}: dropping code {:?} citing {} Quote ID(s) outside the chunk",
                exchange.reference,
                code.label,
                out_of_scope.len()
            );
            rejected.push(RejectedCode { code, out_of_scope });
            continue;
        }
        let entry = merged.entry(code.label.trim().to_string()).or_default();
        if entry.0.is_empty() {
            entry.0 = code.description;
        }
        entry.1.extend(code.quote_ids);
    }
    let codes = merged
        .into_iter()
        .filter_map(|(label, (desc, quotes))| Code::new(label, desc, quotes, identity.name.clone()).ok())
        .collect();
    Ok(CodingOutput {
        codes,
        rejected,
        exchange,
    })
}

/// Drops citations outside the call's scope, logging how many went.
fn retain_scope(quotes: &mut BTreeSet<QuoteId>, in_scope: impl Fn(&QuoteId) -> bool, reference: &str) {
    let before = quotes.len();
    quotes.retain(|q| in_scope(q));
    if quotes.len() < before {
        log::warn!("{reference}: dropped {} out-of-scope citation(s)", before - quotes.len());
    }
}

/// Groups codes into an iteration-0 theme set. Themes may only cite Quote
/// IDs cited by the input codes; others are dropped.
pub fn generate_themes(
    ctx: &AgentContext,
    codes: &[Code],
    identity: Option<&Identity>,
    set_id: &str,
    transcript_ids: Vec<String>,
    seed: u64,
    reference: String,
) -> Result<(ThemeSet, AgentExchange), AgentError> {
    if codes.is_empty() {
        return Err(AgentError::NoCodes);
    }
    let scope: BTreeSet<QuoteId> = codes.iter().flat_map(|c| c.quote_ids.iter().copied()).collect();
    let preamble = identity.map(Identity::preamble).unwrap_or_default();
    let prompt = ctx.prompts.themes.render(&[
        ("identity", &preamble),
        ("codes", &response::render_codes(codes)),
    ]);
    let exchange = ctx.call(AgentRole::ThemeGenerator, identity, reference, prompt, seed, Task::Themes { codes })?;
    let parsed = response::parse_theme_response(&exchange.response).map_err(|e| unparseable(&exchange.reference, e))?;

    let mut ts = ThemeSet::new(set_id, transcript_ids);
    for p in parsed {
        let mut draft = ThemeDraft::new(p.title, p.description).with_quotes(p.quote_ids);
        retain_scope(&mut draft.quote_ids, |q| scope.contains(q), &exchange.reference);
        draft.source_code_labels = p.code_labels.into_iter().collect();
        ts.push(draft);
    }
    Ok((ts, exchange))
}

/// Lets the theme agent reword the current set. Only themes named by ID
/// are updated and none are added or removed, so structural change stays
/// with the audited edit proposals. Citations are limited to the theme's
/// existing ones.
pub fn revise_themes(
    ctx: &AgentContext,
    ts: &ThemeSet,
    seed: u64,
    reference: String,
) -> Result<(ThemeSet, AgentExchange), AgentError> {
    let prompt = ctx.prompts.revise.render(&[
        ("identity", ""),
        ("themes", &response::render_themes(&ts.themes, true)),
    ]);
    let exchange = ctx.call(AgentRole::ThemeReviser, None, reference, prompt, seed, Task::Revise { themes: ts })?;
    let parsed = response::parse_theme_response(&exchange.response).map_err(|e| unparseable(&exchange.reference, e))?;

    let mut out = ts.clone();
    for p in parsed {
        let Some(id) = p.id else { continue };
        let Some(theme) = out.themes.iter_mut().find(|t| t.id == id) else {
            log::warn!("{}: revision names unknown theme {id}", exchange.reference);
            continue;
        };
        let mut quotes: BTreeSet<QuoteId> = p.quote_ids.into_iter().collect();
        retain_scope(&mut quotes, |q| theme.supporting_quote_ids.contains(q), &exchange.reference);
        let mut draft = ThemeDraft::new(p.title, p.description).with_quotes(quotes);
        draft.source_code_labels = if p.code_labels.is_empty() {
            theme.source_code_labels.clone()
        } else {
            p.code_labels.into_iter().collect()
        };
        *theme = crate::model::Theme::from_draft(id, draft);
    }
    Ok((out, exchange))
}

/// Critic output: the scores it was given plus validated proposals.
#[derive(Debug, Clone)]
pub struct Critique {
    pub scores: ScoreVector,
    pub proposals: Vec<EditProposal>,
    /// Proposals dropped as malformed, with the reason.
    pub rejected: Vec<(ParsedEdit, String)>,
    pub exchange: AgentExchange,
}

fn render_scores(s: &ScoreVector) -> String {
    format!(
        "credibility (percent of quotes cited): {:.4}\ndependability: {:.4}\ntransferability: {:.4}",
        s.credibility, s.dependability, s.transferability
    )
}

/// Asks the critic for edits to `ts` given its scores. Proposals must have
/// the right arity and target existing themes; draft citations are limited
/// to corpus Quote IDs. An empty set always receives an Add.
pub fn critique(
    ctx: &AgentContext,
    ts: &ThemeSet,
    scores: ScoreVector,
    corpus: &Corpus,
    rules: &HeuristicRules,
    seed: u64,
    reference: String,
) -> Result<Critique, AgentError> {
    let prompt = ctx.prompts.critic.render(&[
        ("identity", ""),
        ("scores", &render_scores(&scores)),
        ("themes", &response::render_themes(&ts.themes, true)),
    ]);
    let task = Task::Critique {
        themes: ts,
        scores: &scores,
        corpus,
        rules,
    };
    let exchange = ctx.call(AgentRole::Critic, None, reference, prompt, seed, task)?;
    let parsed = response::parse_edit_response(&exchange.response).map_err(|e| unparseable(&exchange.reference, e))?;

    let mut proposals = Vec::new();
    let mut rejected = Vec::new();
    for edit in parsed {
        let mut p = edit.clone().into_proposal();
        for d in &mut p.payload {
            retain_scope(&mut d.quote_ids, |q| corpus.contains(q), &exchange.reference);
        }
        let verdict = p.check_shape().map_err(|e| e.to_string()).and_then(|_| {
            match p.target_theme_ids.iter().find(|id| ts.get(**id).is_none()) {
                Some(id) => Err(format!("unknown theme id {id}")),
                None => Ok(()),
            }
        });
        match verdict {
            Ok(()) => proposals.push(p),
            Err(reason) => {
                log::warn!("{}: rejecting {} proposal: {reason}", exchange.reference, p.kind.as_str());
                rejected.push((edit, reason));
            }
        }
    }
    if ts.is_empty() && !proposals.iter().any(|p| p.kind == EditKind::Add) {
        let forced = heuristic_proposals(ts, &scores, corpus, rules);
        proposals.extend(forced.into_iter().filter(|p| p.kind == EditKind::Add).take(1));
    }
    Ok(Critique {
        scores,
        proposals,
        rejected,
        exchange,
    })
}
