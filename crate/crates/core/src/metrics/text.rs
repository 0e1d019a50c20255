//! Tokenization and n-gram sets shared by the lexical metrics.

use std::collections::BTreeSet;

/// Lowercases, replaces every non-alphanumeric character with a space and
/// splits on whitespace. No stemming, no stopword removal.
pub fn tokenize(text: &str) -> Vec<String> {
    let cleaned: String = text
        .chars()
        .map(|c| if c.is_alphanumeric() { c } else { ' ' })
        .collect::<String>()
        .to_lowercase();
    cleaned.split_whitespace().map(str::to_string).collect()
}

/// Distinct contiguous n-grams of a token sequence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NGramSet {
    n: usize,
    grams: BTreeSet<Vec<String>>,
}

impl NGramSet {
    pub fn from_tokens(tokens: &[String], n: usize) -> Self {
        assert!(n >= 1, "n-gram order must be positive");
        let grams = if tokens.len() < n {
            BTreeSet::new()
        } else {
            tokens.windows(n).map(<[String]>::to_vec).collect()
        };
        Self { n, grams }
    }

    pub fn from_text(text: &str, n: usize) -> Self {
        Self::from_tokens(&tokenize(text), n)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.grams.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grams.is_empty()
    }

    pub fn overlap(&self, other: &NGramSet) -> usize {
        self.grams.intersection(&other.grams).count()
    }

    pub fn grams(&self) -> &BTreeSet<Vec<String>> {
        &self.grams
    }
}

/// Population mean and standard deviation. Empty input yields `(0, 0)`.
pub(crate) fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tokenizer_strips_punctuation_and_case() {
        assert_eq!(
            tokenize("Anxiety about child's HEALTH!"),
            vec!["anxiety", "about", "child", "s", "health"]
        );
        assert!(tokenize("  ...  ").is_empty());
    }

    #[test]
    fn ngram_sets_are_distinct() {
        let s = NGramSet::from_text("a b a b", 2);
        // "a b", "b a" — the repeated "a b" counts once
        assert_eq!(s.len(), 2);
        assert!(NGramSet::from_text("a", 2).is_empty());
    }
}
