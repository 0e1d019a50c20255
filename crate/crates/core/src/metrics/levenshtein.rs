//! Character-level edit distance and the normalized similarity built on it.

use super::MetricError;

/// Minimum number of single-character insertions, deletions or
/// substitutions turning `a` into `b`. Operates on Unicode scalar values.
pub fn edit_distance(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    if a.is_empty() {
        return b.len();
    }
    if b.is_empty() {
        return a.len();
    }

    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, ca) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, cb) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(ca != cb);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// `1 - dist / max(|a|, |b|)` on case-folded strings; two empty strings are
/// identical.
pub fn levenshtein_similarity(a: &str, b: &str) -> f64 {
    let a = a.to_lowercase();
    let b = b.to_lowercase();
    let longest = a.chars().count().max(b.chars().count());
    if longest == 0 {
        return 1.0;
    }
    1.0 - edit_distance(&a, &b) as f64 / longest as f64
}

/// Mean over human themes of the best similarity to any LLM theme.
pub fn levenshtein_alignment<H, L>(human: &[H], llm: &[L]) -> Result<f64, MetricError>
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
                .map(|l| levenshtein_similarity(h.as_ref(), l.as_ref()))
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .sum();
    Ok(total / human.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kitten_sitting() {
        assert_eq!(edit_distance("kitten", "sitting"), 3);
        assert!((levenshtein_similarity("kitten", "sitting") - (1.0 - 3.0 / 7.0)).abs() < 1e-12);
    }

    #[test]
    fn identity_and_maximal() {
        assert_eq!(levenshtein_similarity("Same Title", "same title"), 1.0);
        assert_eq!(levenshtein_similarity("", "abc"), 0.0);
        assert_eq!(levenshtein_similarity("", ""), 1.0);
    }

    #[test]
    fn counts_chars_not_bytes() {
        assert_eq!(edit_distance("café", "cafe"), 1);
    }

    #[test]
    fn near_duplicate_titles() {
        let s = levenshtein_similarity("Anxiety about child's health", "Anxiety about child health");
        assert!((s - (1.0 - 2.0 / 28.0)).abs() < 1e-12);
    }

    #[test]
    fn alignment_takes_best_match() {
        let v = levenshtein_alignment(&["abc"], &["xyz", "abc"]).unwrap();
        assert_eq!(v, 1.0);
        assert_eq!(
            levenshtein_alignment::<&str, &str>(&[], &["a"]),
            Err(MetricError::EmptyThemeList)
        );
    }
}
