//! Score vectors for theme sets inside the refinement loop.

use std::collections::BTreeSet;

use crate::corpus::{Corpus, QuoteId};
use crate::metrics::{credibility, dependability, MetricError};
use crate::model::{ScoreVector, ThemeSet};

/// Where the D component comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum DependabilitySource {
    /// A constant, e.g. when no reference runs are available.
    Fixed(f64),
    /// Mean pairwise agreement of the scored set with these cached runs.
    AgainstRuns(Vec<ThemeSet>),
}

/// Scores theme sets against one corpus. C is recomputed for every set;
/// D compares against cached reference runs; T is computed once up front
/// because it needs fresh generations per split.
#[derive(Debug, Clone)]
pub struct Scorer {
    corpus_quotes: BTreeSet<QuoteId>,
    dependability: DependabilitySource,
    transferability: f64,
}

impl Scorer {
    pub fn new(corpus: &Corpus, dependability: DependabilitySource, transferability: f64) -> Self {
        Self {
            corpus_quotes: corpus.quote_ids().collect(),
            dependability,
            transferability,
        }
    }

    pub fn transferability(&self) -> f64 {
        self.transferability
    }

    pub fn dependability_source(&self) -> &DependabilitySource {
        &self.dependability
    }

    pub fn score(&self, ts: &ThemeSet) -> Result<ScoreVector, MetricError> {
        let c = credibility(ts, &self.corpus_quotes)?;
        let d = match &self.dependability {
            DependabilitySource::Fixed(d) => *d,
            DependabilitySource::AgainstRuns(runs) if runs.is_empty() => 0.0,
            DependabilitySource::AgainstRuns(runs) => {
                let mut all = runs.clone();
                all.push(ts.clone());
                dependability(&all)?.mean
            }
        };
        ScoreVector::new(c, d.clamp(0.0, 1.0), self.transferability.clamp(0.0, 1.0))
            .map_err(|e| MetricError::Provider(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::parse_transcript;
    use crate::model::ThemeDraft;

    #[test]
    fn components() {
        let t = parse_transcript("[P1_S001] a\n[P1_S002] b\n[P1_S003] c\n[P1_S004] d", "t").unwrap();
        let corpus = Corpus::new(vec![t]).unwrap();
        let mut ts = ThemeSet::new("x", vec![]);
        ts.push(ThemeDraft::new("shared words", "").with_quotes([QuoteId::new(1, 1).unwrap()]));

        let s = Scorer::new(&corpus, DependabilitySource::AgainstRuns(vec![ts.clone()]), 0.25)
            .score(&ts)
            .unwrap();
        assert_eq!(s.credibility, 25.0);
        assert_eq!(s.dependability, 1.0);
        assert_eq!(s.transferability, 0.25);

        let s = Scorer::new(&corpus, DependabilitySource::Fixed(0.4), 0.0).score(&ts).unwrap();
        assert_eq!(s.dependability, 0.4);
    }
}
