//! Bidirectional ROUGE-n over distinct n-gram sets.

use super::text::NGramSet;

/// `|G(a) ∩ G(b)| / |G(a)|`, or 0 when `a` has no n-grams.
pub fn rouge_directional(a: &NGramSet, b: &NGramSet) -> f64 {
    if a.is_empty() {
        0.0
    } else {
        a.overlap(b) as f64 / a.len() as f64
    }
}

/// Mean of both directions. Two empty gram sets count as identical (1.0).
pub fn rouge_bidirectional(a: &str, b: &str, n: usize) -> f64 {
    let ga = NGramSet::from_text(a, n);
    let gb = NGramSet::from_text(b, n);
    rouge_bidirectional_sets(&ga, &gb)
}

pub fn rouge_bidirectional_sets(ga: &NGramSet, gb: &NGramSet) -> f64 {
    if ga.is_empty() && gb.is_empty() {
        return 1.0;
    }
    0.5 * (rouge_directional(ga, gb) + rouge_directional(gb, ga))
}

/// `½(R1 + R2)`: the per-pair score behind both dependability and
/// transferability.
pub fn rouge_pair_score(a: &str, b: &str) -> (f64, f64, f64) {
    let r1 = rouge_bidirectional(a, b, 1);
    let r2 = rouge_bidirectional(a, b, 2);
    (r1, r2, 0.5 * (r1 + r2))
}
