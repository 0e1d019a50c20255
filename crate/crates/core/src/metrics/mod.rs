//! Evaluation metrics: trustworthiness scores for a theme set and lexical /
//! semantic alignment against human-authored themes.

pub mod bleu;
pub mod embedding;
pub mod levenshtein;
pub mod rouge;
pub mod text;
pub mod trust;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use bleu::{bleu_alignment, sentence_bleu};
pub use embedding::{
    cosine, cosine_alignment, EmbeddingProvider, EmbeddingVector, HashedBowProvider,
    RemoteEmbeddingProvider,
};
pub use levenshtein::{edit_distance, levenshtein_alignment, levenshtein_similarity};
pub use rouge::{rouge_bidirectional, rouge_pair_score};
pub use text::{tokenize, NGramSet};
pub use trust::{
    credibility, default_val_size, dependability, dependability_texts, enumerate_splits,
    sample_splits, transferability, DependabilityReport, Side, Split, TransferabilityReport,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricError {
    #[error("corpus has no quotes")]
    EmptyCorpus,
    #[error("dependability needs at least 2 runs, got {0}")]
    InsufficientRuns(usize),
    #[error("cannot hold out {val_size} of {units} units")]
    InsufficientUnits { units: usize, val_size: usize },
    #[error("theme list is empty")]
    EmptyThemeList,
    #[error("embedding provider returned an all-zero vector")]
    ZeroVector,
    #[error("embedding dimensions differ: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("embedding provider failed: {0}")]
    Provider(String),
    #[error("pipeline failed on split {split}: {message}")]
    PipelineFailure { split: usize, message: String },
}

/// One human theme with its closest LLM themes by cosine similarity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThemeMatch {
    pub human_index: usize,
    pub human: String,
    pub best: Vec<MatchedTheme>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchedTheme {
    pub llm_index: usize,
    pub llm: String,
    pub cosine: f64,
    pub levenshtein: f64,
    pub bleu: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignmentReport {
    pub cosine_bi: f64,
    #[serde(rename = "levenshtein_DL")]
    pub levenshtein_dl: f64,
    #[serde(rename = "bleu_B")]
    pub bleu_b: f64,
    pub matches: Vec<ThemeMatch>,
}

/// Number of LLM themes listed per human theme in [`AlignmentReport::matches`].
pub const MATCHES_PER_THEME: usize = 2;

/// All three alignment scores plus the per-human-theme best-match table.
pub fn alignment_report<H, L>(
    human: &[H],
    llm: &[L],
    provider: &dyn EmbeddingProvider,
) -> Result<AlignmentReport, MetricError>
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
    let m = embedding::cosine_matrix(&hv, &lv)?;

    let matches = h
        .iter()
        .enumerate()
        .map(|(i, ht)| {
            let mut order: Vec<usize> = (0..l.len()).collect();
            order.sort_by(|&a, &b| m[i][b].total_cmp(&m[i][a]).then(a.cmp(&b)));
            let best = order
                .into_iter()
                .take(MATCHES_PER_THEME)
                .map(|j| MatchedTheme {
                    llm_index: j,
                    llm: l[j].to_string(),
                    cosine: m[i][j],
                    levenshtein: levenshtein_similarity(ht, l[j]),
                    bleu: sentence_bleu(l[j], ht),
                })
                .collect();
            ThemeMatch {
                human_index: i,
                human: ht.to_string(),
                best,
            }
        })
        .collect();

    Ok(AlignmentReport {
        cosine_bi: embedding::bidirectional_from_matrix(&m),
        levenshtein_dl: levenshtein_alignment(&h, &l)?,
        bleu_b: bleu_alignment(&h, &l)?,
        matches,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_lists_score_one_everywhere() {
        let themes = ["Fear of sudden death", "Navigating sports clearance"];
        let r = alignment_report(&themes, &themes, &HashedBowProvider::default()).unwrap();
        assert!((r.cosine_bi - 1.0).abs() < 1e-12);
        assert_eq!(r.levenshtein_dl, 1.0);
        assert!((r.bleu_b - 1.0).abs() < 1e-12);
        assert_eq!(r.matches.len(), 2);
        assert_eq!(r.matches[0].best[0].llm_index, 0);
        assert_eq!(r.matches[0].best.len(), 2);
    }

    #[test]
    fn empty_human_list() {
        let empty: [&str; 0] = [];
        assert_eq!(
            alignment_report(&empty, &["x"], &HashedBowProvider::default()),
            Err(MetricError::EmptyThemeList)
        );
    }
}
