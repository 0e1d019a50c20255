//! Text embeddings and bidirectional cosine alignment.

use std::hash::Hasher;
use std::time::Duration;

use fnv::FnvHasher;
use serde::{Deserialize, Serialize};

use super::text::tokenize;
use super::MetricError;

/// Dimension of the default hashed bag-of-words provider.
pub const HASHED_DIM: usize = 512;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingVector {
    pub provider: String,
    pub values: Vec<f64>,
}

impl EmbeddingVector {
    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }
}

pub trait EmbeddingProvider: Send + Sync {
    fn id(&self) -> &str;
    fn embed(&self, text: &str) -> Result<EmbeddingVector, MetricError>;

    fn embed_all(&self, texts: &[&str]) -> Result<Vec<EmbeddingVector>, MetricError> {
        texts.iter().map(|t| self.embed(t)).collect()
    }
}

/// Token counts hashed (FNV-1a) into a fixed number of buckets, then
/// L2-normalized. Deterministic across runs and platforms.
#[derive(Debug, Clone)]
pub struct HashedBowProvider {
    dim: usize,
    id: String,
}

impl HashedBowProvider {
    pub fn new(dim: usize) -> Self {
        assert!(dim > 0);
        Self {
            dim,
            id: format!("hashed-bow-{dim}"),
        }
    }

    pub fn bucket(&self, token: &str) -> usize {
        let mut h = FnvHasher::default();
        h.write(token.as_bytes());
        (h.finish() % self.dim as u64) as usize
    }
}

impl Default for HashedBowProvider {
    fn default() -> Self {
        Self::new(HASHED_DIM)
    }
}

impl EmbeddingProvider for HashedBowProvider {
    fn id(&self) -> &str {
        &self.id
    }

    fn embed(&self, text: &str) -> Result<EmbeddingVector, MetricError> {
        let mut values = vec![0.0; self.dim];
        for tok in tokenize(text) {
            values[self.bucket(&tok)] += 1.0;
        }
        let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            values.iter_mut().for_each(|v| *v /= norm);
        }
        Ok(EmbeddingVector {
            provider: self.id.clone(),
            values,
        })
    }
}

/// An OpenAI-style `/embeddings` endpoint.
pub struct RemoteEmbeddingProvider {
    endpoint: String,
    model: String,
    api_key: Option<String>,
    client: reqwest::blocking::Client,
}

impl RemoteEmbeddingProvider {
    pub fn new(endpoint: impl Into<String>, model: impl Into<String>, api_key: Option<String>) -> Self {
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(60))
            .build()
            .expect("http client");
        Self {
            endpoint: endpoint.into(),
            model: model.into(),
            api_key,
            client,
        }
    }
}

#[derive(Deserialize)]
struct EmbeddingResponse {
    data: Vec<EmbeddingDatum>,
}

#[derive(Deserialize)]
struct EmbeddingDatum {
    embedding: Vec<f64>,
}

impl EmbeddingProvider for RemoteEmbeddingProvider {
    fn id(&self) -> &str {
        &self.model
    }

    fn embed(&self, text: &str) -> Result<EmbeddingVector, MetricError> {
        let mut req = self
            .client
            .post(&self.endpoint)
            .json(&serde_json::json!({ "model": self.model, "input": text }));
        if let Some(key) = &self.api_key {
            req = req.bearer_auth(key);
        }
        let resp = req
            .send()
            .and_then(|r| r.error_for_status())
            .map_err(|e| MetricError::Provider(e.to_string()))?;
        let body: EmbeddingResponse = resp
            .json()
            .map_err(|e| MetricError::Provider(e.to_string()))?;
        let values = body
            .data
            .into_iter()
            .next()
            .ok_or_else(|| MetricError::Provider("empty embedding response".into()))?
            .embedding;
        Ok(EmbeddingVector {
            provider: self.model.clone(),
            values,
        })
    }
}

/// `u·v / (‖u‖‖v‖)`.
pub fn cosine(u: &EmbeddingVector, v: &EmbeddingVector) -> Result<f64, MetricError> {
    if u.values.len() != v.values.len() {
        return Err(MetricError::DimensionMismatch(u.values.len(), v.values.len()));
    }
    let (nu, nv) = (u.norm(), v.norm());
    if nu == 0.0 || nv == 0.0 {
        return Err(MetricError::ZeroVector);
    }
    let dot: f64 = u.values.iter().zip(&v.values).map(|(a, b)| a * b).sum();
    Ok(dot / (nu * nv))
}

/// Full human × LLM cosine matrix.
pub fn cosine_matrix(
    human: &[EmbeddingVector],
    llm: &[EmbeddingVector],
) -> Result<Vec<Vec<f64>>, MetricError> {
    human
        .iter()
        .map(|h| llm.iter().map(|l| cosine(h, l)).collect())
        .collect()
}

/// Mean of the human→LLM and LLM→human mean-of-best cosine similarities.
pub fn cosine_alignment<H, L>(
    human: &[H],
    llm: &[L],
    provider: &dyn EmbeddingProvider,
) -> Result<f64, MetricError>
where
    H: AsRef<str>,
    L: AsRef<str>,
{
    if human.is_empty() || llm.is_empty() {
        return Err(MetricError::EmptyThemeList);
    }
    let h: Vec<&str> = human.iter().map(AsRef::as_ref).collect();
    let l: Vec<&str> = llm.iter().map(AsRef::as_ref).collect();
    let hv = provider.embed_all(&h)?;
    let lv = provider.embed_all(&l)?;
    let m = cosine_matrix(&hv, &lv)?;
    Ok(bidirectional_from_matrix(&m))
}

pub(crate) fn bidirectional_from_matrix(m: &[Vec<f64>]) -> f64 {
    let rows = m.len();
    let cols = m[0].len();
    let h_to_l: f64 = m
        .iter()
        .map(|row| row.iter().copied().fold(f64::NEG_INFINITY, f64::max))
        .sum::<f64>()
        / rows as f64;
    let l_to_h: f64 = (0..cols)
        .map(|j| m.iter().map(|row| row[j]).fold(f64::NEG_INFINITY, f64::max))
        .sum::<f64>()
        / cols as f64;
    0.5 * (h_to_l + l_to_h)
}
