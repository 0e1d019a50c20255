//! Trustworthiness scores: credibility, dependability and transferability.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::rouge::rouge_pair_score;
use super::text::mean_std;
use super::MetricError;
use crate::corpus::QuoteId;
use crate::model::ThemeSet;

/// `|Q_ref| / |Q| × 100`, where `Q_ref` is the part of the corpus cited by
/// at least one theme.
pub fn credibility(ts: &ThemeSet, corpus_quote_ids: &BTreeSet<QuoteId>) -> Result<f64, MetricError> {
    if corpus_quote_ids.is_empty() {
        return Err(MetricError::EmptyCorpus);
    }
    let referenced = ts
        .cited_quotes()
        .intersection(corpus_quote_ids)
        .count();
    Ok(referenced as f64 / corpus_quote_ids.len() as f64 * 100.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairScore {
    pub a: usize,
    pub b: usize,
    pub rouge1: f64,
    pub rouge2: f64,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DependabilityReport {
    pub mean: f64,
    pub std: f64,
    pub pairs: Vec<PairScore>,
}

/// Mean of `½(R1 + R2)` over every unordered pair of runs.
pub fn dependability_texts<S: AsRef<str>>(runs: &[S]) -> Result<DependabilityReport, MetricError> {
    if runs.len() < 2 {
        return Err(MetricError::InsufficientRuns(runs.len()));
    }
    let mut pairs = Vec::with_capacity(runs.len() * (runs.len() - 1) / 2);
    for a in 0..runs.len() {
        for b in a + 1..runs.len() {
            let (rouge1, rouge2, score) = rouge_pair_score(runs[a].as_ref(), runs[b].as_ref());
            pairs.push(PairScore {
                a,
                b,
                rouge1,
                rouge2,
                score,
            });
        }
    }
    let scores: Vec<f64> = pairs.iter().map(|p| p.score).collect();
    let (mean, std) = mean_std(&scores);
    Ok(DependabilityReport { mean, std, pairs })
}

pub fn dependability(runs: &[ThemeSet]) -> Result<DependabilityReport, MetricError> {
    let texts: Vec<String> = runs.iter().map(ThemeSet::text).collect();
    dependability_texts(&texts)
}

/// One train/validation partition of corpus units, by unit index.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub index: usize,
    pub train: Vec<usize>,
    pub val: Vec<usize>,
}

/// Validation-set size used when none is given: two held-out units once
/// there are at least four, otherwise one.
pub fn default_val_size(units: usize) -> usize {
    if units >= 4 {
        2
    } else {
        1
    }
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            if n - i < k - cur.len() {
                break;
            }
            cur.push(i);
            go(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(0, n, k, &mut Vec::with_capacity(k), &mut out);
    out
}

/// Every way of holding out `val_size` of `units`, in lexicographic order of
/// the held-out indices. Both sides must be non-empty.
pub fn enumerate_splits(units: usize, val_size: usize) -> Result<Vec<Split>, MetricError> {
    if val_size == 0 || val_size >= units {
        return Err(MetricError::InsufficientUnits { units, val_size });
    }
    Ok(combinations(units, val_size)
        .into_iter()
        .enumerate()
        .map(|(index, val)| {
            let train = (0..units).filter(|i| !val.contains(i)).collect();
            Split { index, train, val }
        })
        .collect())
}

/// A seeded sample of `k` splits (all of them when `k` is at least the total),
/// returned in split-index order.
pub fn sample_splits(all: Vec<Split>, k: usize, seed: u64) -> Vec<Split> {
    if k >= all.len() {
        return all;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked: Vec<Split> = all.choose_multiple(&mut rng, k).cloned().collect();
    picked.sort_by_key(|s| s.index);
    picked
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Train,
    Val,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitScore {
    pub split: Split,
    pub rouge1: f64,
    pub rouge2: f64,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferabilityReport {
    pub mean: f64,
    pub std: f64,
    pub splits: Vec<SplitScore>,
}

/// Generates independent theme sets for the train and validation side of
/// each split and scores them with `½(R'1 + R'2)`. Splits run in parallel;
/// results come back in the order given.
pub fn transferability<U, F>(
    units: &[U],
    splits: &[Split],
    generate: F,
) -> Result<TransferabilityReport, MetricError>
where
    U: Sync,
    F: Fn(&Split, Side, &[&U]) -> Result<ThemeSet, String> + Sync,
{
    if splits.is_empty() {
        return Err(MetricError::InsufficientUnits {
            units: units.len(),
            val_size: 0,
        });
    }
    let scores = splits
        .par_iter()
        .map(|split| {
            let pick = |idx: &[usize]| -> Result<Vec<&U>, MetricError> {
                idx.iter()
                    .map(|&i| {
                        units.get(i).ok_or(MetricError::InsufficientUnits {
                            units: units.len(),
                            val_size: split.val.len(),
                        })
                    })
                    .collect()
            };
            let fail = |message| MetricError::PipelineFailure {
                split: split.index,
                message,
            };
            let train = generate(split, Side::Train, &pick(&split.train)?).map_err(fail)?;
            let val = generate(split, Side::Val, &pick(&split.val)?).map_err(fail)?;
            let (rouge1, rouge2, score) = rouge_pair_score(&train.text(), &val.text());
            Ok(SplitScore {
                split: split.clone(),
                rouge1,
                rouge2,
                score,
            })
        })
        .collect::<Result<Vec<_>, MetricError>>()?;
    let values: Vec<f64> = scores.iter().map(|s| s.score).collect();
    let (mean, std) = mean_std(&values);
    Ok(TransferabilityReport {
        mean,
        std,
        splits: scores,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ThemeDraft;

    fn ts_with(titles: &[&str], quotes: &[(u32, u32)]) -> ThemeSet {
        let mut ts = ThemeSet::new("x", vec![]);
        for t in titles {
            ts.push(
                ThemeDraft::new(*t, "")
                    .with_quotes(quotes.iter().map(|&(p, s)| QuoteId::new(p, s).unwrap())),
            );
        }
        ts
    }

    fn corpus_ids(n: u32) -> BTreeSet<QuoteId> {
        (1..=n).map(|s| QuoteId::new(1, s).unwrap()).collect()
    }

    #[test]
    fn credibility_cases() {
        let all: Vec<(u32, u32)> = (1..=10).map(|s| (1, s)).collect();
        assert_eq!(credibility(&ts_with(&["a"], &all), &corpus_ids(10)).unwrap(), 100.0);
        assert_eq!(credibility(&ts_with(&[], &[]), &corpus_ids(10)).unwrap(), 0.0);
        assert_eq!(credibility(&ts_with(&["a"], &all[..8]), &corpus_ids(10)).unwrap(), 80.0);
        // quotes outside the corpus do not count
        assert_eq!(credibility(&ts_with(&["a"], &[(9, 9)]), &corpus_ids(10)).unwrap(), 0.0);
        assert_eq!(
            credibility(&ts_with(&["a"], &all), &BTreeSet::new()),
            Err(MetricError::EmptyCorpus)
        );
    }

    #[test]
    fn dependability_pairs() {
        let runs: Vec<String> = (0..10).map(|i| format!("theme {i}")).collect();
        let r = dependability_texts(&runs).unwrap();
        assert_eq!(r.pairs.len(), 45);
        let same = vec!["fear of surgery"; 3];
        assert_eq!(dependability_texts(&same).unwrap().mean, 1.0);
        assert_eq!(
            dependability_texts(&["one"]),
            Err(MetricError::InsufficientRuns(1))
        );
    }

    #[test]
    fn split_counts() {
        assert_eq!(enumerate_splits(9, 2).unwrap().len(), 36);
        assert_eq!(enumerate_splits(3, 1).unwrap().len(), 3);
        assert_eq!(default_val_size(9), 2);
        assert_eq!(default_val_size(3), 1);
        let s = &enumerate_splits(4, 2).unwrap()[0];
        assert_eq!((s.train.clone(), s.val.clone()), (vec![2, 3], vec![0, 1]));
        assert!(enumerate_splits(2, 2).is_err());
    }

    #[test]
    fn sampled_splits_are_stable_subset() {
        let all = enumerate_splits(9, 2).unwrap();
        let a = sample_splits(all.clone(), 6, 7);
        let b = sample_splits(all.clone(), 6, 7);
        assert_eq!(a, b);
        assert_eq!(a.len(), 6);
        assert!(a.windows(2).all(|w| w[0].index < w[1].index));
    }

    #[test]
    fn constant_generator() {
        let units: Vec<u32> = (0..9).collect();
        let splits = enumerate_splits(9, 2).unwrap();
        let r = transferability(&units, &splits, |_, _, _| {
            Ok(ts_with(&["Navigating care transitions"], &[(1, 1)]))
        })
        .unwrap();
        assert_eq!(r.splits.len(), 36);
        assert_eq!(r.mean, 1.0);
        assert_eq!(r.std, 0.0);
    }

    #[test]
    fn failing_split_is_identified() {
        let units: Vec<u32> = (0..3).collect();
        let splits = enumerate_splits(3, 1).unwrap();
        let err = transferability(&units, &splits, |s, _, _| {
            if s.index == 2 {
                Err("boom".into())
            } else {
                Ok(ts_with(&["x"], &[]))
            }
        })
        .unwrap_err();
        assert_eq!(
            err,
            MetricError::PipelineFailure {
                split: 2,
                message: "boom".into()
            }
        );
    }
}
