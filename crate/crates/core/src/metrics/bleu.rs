//! Sentence BLEU against a single reference, without smoothing.

use std::collections::HashMap;

use super::text::tokenize;
use super::MetricError;

pub const MAX_ORDER: usize = 4;

fn ngram_counts(tokens: &[String], n: usize) -> HashMap<&[String], usize> {
    let mut counts = HashMap::new();
    if tokens.len() >= n {
        for w in tokens.windows(n) {
            *counts.entry(w).or_insert(0) += 1;
        }
    }
    counts
}

/// Clipped n-gram matches and the candidate's n-gram total for order `n`.
pub fn modified_precision(candidate: &[String], reference: &[String], n: usize) -> (usize, usize) {
    let cand = ngram_counts(candidate, n);
    let refc = ngram_counts(reference, n);
    let matched = cand
        .iter()
        .map(|(g, &c)| c.min(refc.get(g).copied().unwrap_or(0)))
        .sum();
    (matched, candidate.len().saturating_sub(n - 1))
}

/// BLEU of `candidate` against one `reference`.
///
/// The geometric mean runs over orders `1..=min(4, candidate length)`; a
/// candidate shorter than four tokens has no higher-order n-grams to score.
/// Any scored order with zero matches gives 0. Brevity penalty is
/// `exp(1 - r/c)` when `c < r`.
pub fn sentence_bleu(candidate: &str, reference: &str) -> f64 {
    let cand = tokenize(candidate);
    let refr = tokenize(reference);
    if cand.is_empty() {
        return if refr.is_empty() { 1.0 } else { 0.0 };
    }
    let orders = MAX_ORDER.min(cand.len());
    let mut log_sum = 0.0;
    for n in 1..=orders {
        let (matched, total) = modified_precision(&cand, &refr, n);
        if matched == 0 {
            return 0.0;
        }
        log_sum += (matched as f64 / total as f64).ln();
    }
    let c = cand.len() as f64;
    let r = refr.len() as f64;
    let bp = if c < r { (1.0 - r / c).exp() } else { 1.0 };
    bp * (log_sum / orders as f64).exp()
}

/// For each human theme (reference), the best BLEU over LLM themes
/// (candidates); averaged over human themes.
pub fn bleu_alignment<H, L>(human: &[H], llm: &[L]) -> Result<f64, MetricError>
where
    H: AsRef<str>,
    L: AsRef<str>,
{
    if human.is_empty() || llm.is_empty() {
        return Err(MetricError::EmptyThemeList);
    }
    let total: f64 = human
        .iter()
        .map(|h| {
            llm.iter()
                .map(|l| sentence_bleu(l.as_ref(), h.as_ref()))
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .sum();
    Ok(total / human.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_is_one() {
        assert!((sentence_bleu("the cat sat on the mat", "the cat sat on the mat") - 1.0).abs() < 1e-12);
        assert!((sentence_bleu("fear", "fear") - 1.0).abs() < 1e-12);
    }

    #[test]
    fn no_shared_unigrams() {
        assert_eq!(sentence_bleu("alpha beta", "gamma delta"), 0.0);
    }

    #[test]
    fn short_candidate_brevity_penalty() {
        // p1 = 3/3, p2 = 2/2, p3 = 1/1; BP = exp(1 - 4/3)
        let v = sentence_bleu("the cat sat", "the cat sat down");
        assert!((v - (1.0f64 - 4.0 / 3.0).exp()).abs() < 1e-12);
    }

    #[test]
    fn clipping() {
        // candidate "the the the the", reference "the cat": p1 = 1/4, p2 = 0 -> 0
        assert_eq!(sentence_bleu("the the the the", "the cat"), 0.0);
        let toks: Vec<String> = tokenize("the the the");
        let refr: Vec<String> = tokenize("the cat the");
        assert_eq!(modified_precision(&toks, &refr, 1), (2, 3));
    }

    #[test]
    fn missing_higher_order_match_is_zero() {
        // 4-gram order exists in the candidate but never matches
        assert_eq!(sentence_bleu("a b c d", "a b c x d"), 0.0);
    }
}
