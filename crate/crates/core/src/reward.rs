//! Binary human ratings, a linear reward model trained by MSE, and
//! reward-guided best-of-n selection of theme sets.
//!
//! Selection stands in for policy-gradient fine-tuning, which is not
//! possible against hosted model weights: candidates are generated
//! independently and the highest-reward one is kept.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::metrics::{cosine, EmbeddingProvider, HashedBowProvider};
use crate::metrics::embedding::HASHED_DIM;
use crate::model::{ScoreVector, ThemeSet, THEME_WORD_LIMIT};

pub const FEATURE_DIM: usize = 6;

/// Theme count that maps to a feature value of 1.
const THEME_COUNT_SCALE: f64 = 20.0;

pub const FEATURE_NAMES: [&str; FEATURE_DIM] = [
    "credibility",
    "dependability",
    "transferability",
    "mean_cosine_distance",
    "mean_word_count",
    "theme_count",
];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RewardError {
    #[error("no training records")]
    NoRecords,
    #[error("learning rate must be positive and finite, got {0}")]
    InvalidLearningRate(f64),
    #[error("loss became non-finite at epoch {epoch}")]
    DivergedLoss { epoch: usize },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("rating must be 0 or 1, got {0}")]
    InvalidRating(i64),
    #[error("expected {FEATURE_DIM} features, got {0}")]
    DimensionMismatch(usize),
    #[error("feature {index} is not finite")]
    NonFiniteFeature { index: usize },
    #[error("no candidates to select from")]
    NoCandidates,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Criterion {
    Coverage,
    Actionability,
    Distinctiveness,
    Relevance,
}

/// One human judgement of a whole theme set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RecordRepr")]
pub struct RewardRecord {
    pub theme_set_id: String,
    /// 0 or 1.
    pub rating: u8,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub criteria_notes: BTreeMap<Criterion, String>,
    #[serde(default)]
    pub rater_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<String>,
    /// Precomputed features; otherwise looked up from the rated theme set.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub features: Option<FeatureVector>,
}

#[derive(Deserialize)]
struct RecordRepr {
    theme_set_id: String,
    rating: i64,
    #[serde(default)]
    criteria_notes: BTreeMap<Criterion, String>,
    #[serde(default)]
    rater_id: String,
    #[serde(default)]
    timestamp: Option<String>,
    #[serde(default)]
    features: Option<FeatureVector>,
}

impl TryFrom<RecordRepr> for RewardRecord {
    type Error = RewardError;
    fn try_from(r: RecordRepr) -> Result<Self, Self::Error> {
        let rating = match r.rating {
            0 | 1 => r.rating as u8,
            other => return Err(RewardError::InvalidRating(other)),
        };
        Ok(Self {
            theme_set_id: r.theme_set_id,
            rating,
            criteria_notes: r.criteria_notes,
            rater_id: r.rater_id,
            timestamp: r.timestamp,
            features: r.features,
        })
    }
}

/// One record per non-blank line; errors carry 1-based line numbers.
pub fn parse_reward_records(jsonl: &str) -> Result<Vec<RewardRecord>, RewardError> {
    jsonl
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| RewardError::Parse {
                line: i + 1,
                message: e.to_string(),
            })
        })
        .collect()
}

/// `[C/100, D, T, mean pairwise cosine distance, mean word count / 60,
/// theme count / 20]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct FeatureVector {
    pub values: [f64; FEATURE_DIM],
}

impl TryFrom<Vec<f64>> for FeatureVector {
    type Error = RewardError;
    fn try_from(v: Vec<f64>) -> Result<Self, Self::Error> {
        let values: [f64; FEATURE_DIM] = v
            .as_slice()
            .try_into()
            .map_err(|_| RewardError::DimensionMismatch(v.len()))?;
        Self::new(values)
    }
}

impl From<FeatureVector> for Vec<f64> {
    fn from(f: FeatureVector) -> Self {
        f.values.to_vec()
    }
}

impl FeatureVector {
    pub fn new(values: [f64; FEATURE_DIM]) -> Result<Self, RewardError> {
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(RewardError::NonFiniteFeature { index });
        }
        Ok(Self { values })
    }

    pub fn from_theme_set(ts: &ThemeSet, s: &ScoreVector) -> Self {
        let [c, d, t] = s.normalized();
        let n = ts.len();
        let mean_wc = if n == 0 {
            0.0
        } else {
            ts.themes.iter().map(|t| t.word_count as f64).sum::<f64>() / n as f64
        };
        Self {
            values: [
                c,
                d,
                t,
                mean_cosine_distance(ts),
                mean_wc / THEME_WORD_LIMIT as f64,
                n as f64 / THEME_COUNT_SCALE,
            ],
        }
    }
}

/// Mean of `1 - cos` over theme pairs under the hashed bag-of-words
/// embedding; a pair involving an empty embedding counts as distance 1.
/// Zero when there are fewer than two themes.
pub fn mean_cosine_distance(ts: &ThemeSet) -> f64 {
    let provider = HashedBowProvider::new(HASHED_DIM);
    let vecs: Vec<_> = ts
        .themes
        .iter()
        .map(|t| provider.embed(&t.text()).expect("hashed provider is infallible"))
        .collect();
    let mut total = 0.0;
    let mut pairs = 0usize;
    for i in 0..vecs.len() {
        for j in i + 1..vecs.len() {
            total += cosine(&vecs[i], &vecs[j]).map_or(1.0, |c| 1.0 - c);
            pairs += 1;
        }
    }
    if pairs == 0 {
        0.0
    } else {
        total / pairs as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingMetadata {
    pub epochs: usize,
    pub learning_rate: f64,
    pub records: usize,
    pub final_loss: f64,
    /// Loss before the first update and after every epoch.
    #[serde(default)]
    pub loss_curve: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardModel {
    pub weights: [f64; FEATURE_DIM],
    pub bias: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metadata: Option<TrainingMetadata>,
}

impl RewardModel {
    pub fn new(weights: [f64; FEATURE_DIM], bias: f64) -> Self {
        Self {
            weights,
            bias,
            metadata: None,
        }
    }

    pub fn predict(&self, x: &FeatureVector) -> f64 {
        predict(&self.weights, self.bias, x)
    }

    /// `w · features(ts, s) + b`.
    pub fn score_theme_set(&self, ts: &ThemeSet, s: &ScoreVector) -> f64 {
        self.predict(&FeatureVector::from_theme_set(ts, s))
    }
}

pub fn score_theme_set(ts: &ThemeSet, s: &ScoreVector, model: &RewardModel) -> f64 {
    model.score_theme_set(ts, s)
}

fn predict(w: &[f64; FEATURE_DIM], b: f64, x: &FeatureVector) -> f64 {
    w.iter().zip(&x.values).map(|(w, x)| w * x).sum::<f64>() + b
}

/// `mean_i (w·x_i + b − r_i)²`.
pub fn mse_loss(w: &[f64; FEATURE_DIM], b: f64, data: &[(FeatureVector, f64)]) -> f64 {
    if data.is_empty() {
        return 0.0;
    }
    data.iter()
        .map(|(x, r)| (predict(w, b, x) - r).powi(2))
        .sum::<f64>()
        / data.len() as f64
}

/// `(∂L/∂w, ∂L/∂b)` of [`mse_loss`].
pub fn mse_gradients(w: &[f64; FEATURE_DIM], b: f64, data: &[(FeatureVector, f64)]) -> ([f64; FEATURE_DIM], f64) {
    let mut gw = [0.0; FEATURE_DIM];
    let mut gb = 0.0;
    if data.is_empty() {
        return (gw, gb);
    }
    let scale = 2.0 / data.len() as f64;
    for (x, r) in data {
        let err = predict(w, b, x) - r;
        for (g, xi) in gw.iter_mut().zip(&x.values) {
            *g += scale * err * xi;
        }
        gb += scale * err;
    }
    (gw, gb)
}

/// Full-batch gradient descent from zero weights and bias.
pub fn train_reward_model(data: &[(FeatureVector, f64)], lr: f64, epochs: usize) -> Result<RewardModel, RewardError> {
    if data.is_empty() {
        return Err(RewardError::NoRecords);
    }
    if !(lr > 0.0 && lr.is_finite()) {
        return Err(RewardError::InvalidLearningRate(lr));
    }
    let mut w = [0.0; FEATURE_DIM];
    let mut b = 0.0;
    let mut curve = Vec::with_capacity(epochs + 1);
    curve.push(mse_loss(&w, b, data));
    for epoch in 1..=epochs {
        let (gw, gb) = mse_gradients(&w, b, data);
        for (wi, gi) in w.iter_mut().zip(gw) {
            *wi -= lr * gi;
        }
        b -= lr * gb;
        let loss = mse_loss(&w, b, data);
        if !loss.is_finite() {
            return Err(RewardError::DivergedLoss { epoch });
        }
        curve.push(loss);
    }
    Ok(RewardModel {
        weights: w,
        bias: b,
        metadata: Some(TrainingMetadata {
            epochs,
            learning_rate: lr,
            records: data.len(),
            final_loss: *curve.last().expect("non-empty"),
            loss_curve: curve,
        }),
    })
}

/// Index of the highest score; ties go to the lexicographically lowest id.
pub fn argmax_by_score(scored: &[(f64, &str)]) -> Result<usize, RewardError> {
    let mut best: Option<usize> = None;
    for (i, (s, id)) in scored.iter().enumerate() {
        best = match best {
            Some(j) => {
                let (bs, bid) = scored[j];
                if *s > bs || (*s == bs && *id < bid) {
                    Some(i)
                } else {
                    Some(j)
                }
            }
            None => Some(i),
        };
    }
    best.ok_or(RewardError::NoCandidates)
}

/// A generated theme set together with its trustworthiness scores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub theme_set: ThemeSet,
    pub score: ScoreVector,
}

/// The candidate with the highest reward, ties broken by lower theme-set
/// id. Returns its index and reward.
pub fn best_of_n_select(candidates: &[Candidate], model: &RewardModel) -> Result<(usize, f64), RewardError> {
    let rewards: Vec<f64> = candidates
        .iter()
        .map(|c| model.score_theme_set(&c.theme_set, &c.score))
        .collect();
    let scored: Vec<(f64, &str)> = rewards
        .iter()
        .zip(candidates)
        .map(|(r, c)| (*r, c.theme_set.id.as_str()))
        .collect();
    let i = argmax_by_score(&scored)?;
    Ok((i, rewards[i]))
}
