//! Rule-based edit proposals. The mock critic emits exactly these.

use std::collections::{BTreeSet, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::agents::mock::content_tokens;
use crate::corpus::{Corpus, QuoteId, Utterance};
use crate::metrics::levenshtein_similarity;
use crate::model::{EditProposal, ScoreVector, Theme, ThemeDraft, ThemeId, ThemeSet, THEME_WORD_LIMIT};

/// Words taken from an uncited utterance to title an added theme.
const ADD_TITLE_WORDS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeuristicRules {
    /// Add fires when `C / 100` falls below this.
    pub credibility_add_threshold: f64,
    /// Combine fires when title similarity exceeds `1 - threshold`.
    pub levenshtein_combine_threshold: f64,
    /// Split considers themes longer than this many words.
    pub split_word_limit: usize,
}

impl Default for HeuristicRules {
    fn default() -> Self {
        Self {
            credibility_add_threshold: 0.7,
            levenshtein_combine_threshold: 0.20,
            split_word_limit: THEME_WORD_LIMIT,
        }
    }
}

/// Proposals in application order: Delete, Combine (most similar pair
/// first), Split, Add. A theme is targeted by at most one proposal, so
/// every proposal in the batch stays applicable.
pub fn heuristic_proposals(ts: &ThemeSet, s: &ScoreVector, corpus: &Corpus, rules: &HeuristicRules) -> Vec<EditProposal> {
    let mut out = Vec::new();
    let mut claimed: HashSet<ThemeId> = HashSet::new();

    for t in ts.themes.iter().filter(|t| t.supporting_quote_ids.is_empty()) {
        out.push(EditProposal::delete(t.id, "cites no supporting quotes"));
        claimed.insert(t.id);
    }

    for (sim, a, b) in combine_pairs(ts, rules, &claimed) {
        if claimed.contains(&a) || claimed.contains(&b) {
            continue;
        }
        claimed.insert(a);
        claimed.insert(b);
        let why = format!("titles are near-duplicates (similarity {sim:.3})");
        out.push(EditProposal::combine(vec![a, b], why).expect("two distinct targets"));
    }

    for t in &ts.themes {
        if claimed.contains(&t.id) || !should_split(t, corpus, rules) {
            continue;
        }
        let [first, second] = split_halves(t);
        out.push(EditProposal::split(t.id, [first, second], "long theme spanning most transcripts"));
    }

    if ts.is_empty() || s.credibility / 100.0 < rules.credibility_add_threshold {
        if let Some(draft) = add_draft(ts, corpus) {
            out.push(EditProposal::add(draft, "large share of the corpus is uncited"));
        }
    }
    out
}

/// Candidate pairs above the similarity cut, most similar first, then by
/// position. Themes in `excluded` are skipped.
fn combine_pairs(ts: &ThemeSet, rules: &HeuristicRules, excluded: &HashSet<ThemeId>) -> Vec<(f64, ThemeId, ThemeId)> {
    let cut = 1.0 - rules.levenshtein_combine_threshold;
    let live: Vec<&Theme> = ts.themes.iter().filter(|t| !excluded.contains(&t.id)).collect();
    let mut pairs = Vec::new();
    for (i, a) in live.iter().enumerate() {
        for (j, b) in live.iter().enumerate().skip(i + 1) {
            let sim = levenshtein_similarity(&a.title, &b.title);
            if sim > cut {
                pairs.push((sim, i, j, a.id, b.id));
            }
        }
    }
    pairs.sort_by(|x, y| y.0.total_cmp(&x.0).then((x.1, x.2).cmp(&(y.1, y.2))));
    pairs.into_iter().map(|(s, _, _, a, b)| (s, a, b)).collect()
}

fn should_split(t: &Theme, corpus: &Corpus, rules: &HeuristicRules) -> bool {
    t.word_count > rules.split_word_limit
        && 2 * corpus.transcripts_spanned(&t.supporting_quote_ids) > corpus.len()
}

fn halve<T: Clone>(items: &[T]) -> (Vec<T>, Vec<T>) {
    let mid = items.len().div_ceil(2);
    (items[..mid].to_vec(), items[mid..].to_vec())
}

/// Two halves by quote order and description words; the second half keeps
/// the whole quote set if there is only one quote.
fn split_halves(t: &Theme) -> [ThemeDraft; 2] {
    let quotes: Vec<QuoteId> = t.supporting_quote_ids.iter().copied().collect();
    let (qa, mut qb) = halve(&quotes);
    if qb.is_empty() {
        qb = qa.clone();
    }
    let words: Vec<&str> = t.description.split_whitespace().collect();
    let (da, db) = halve(&words);
    let mk = |n: u8, desc: Vec<&str>, q: Vec<QuoteId>| {
        let mut d = ThemeDraft::new(format!("{} ({n})", t.title), desc.join(" ")).with_quotes(q);
        d.source_code_labels = t.source_code_labels.clone();
        d
    };
    [mk(1, da, qa), mk(2, db, qb)]
}

/// A theme built around the uncited utterance whose tokens are most common
/// among uncited utterances; it cites every uncited utterance sharing that
/// utterance's most common token.
fn add_draft(ts: &ThemeSet, corpus: &Corpus) -> Option<ThemeDraft> {
    let cited = ts.cited_quotes();
    let uncited: Vec<(&Utterance, Vec<String>)> = corpus
        .utterances()
        .filter(|u| !cited.contains(&u.quote_id))
        .map(|u| (u, content_tokens(&u.text)))
        .collect();
    if uncited.is_empty() {
        return None;
    }
    let mut freq: HashMap<&str, usize> = HashMap::new();
    for (_, toks) in &uncited {
        for t in toks {
            *freq.entry(t.as_str()).or_default() += 1;
        }
    }
    let weight = |toks: &[String]| -> usize { toks.iter().map(|t| freq[t.as_str()]).sum() };
    // max_by_key keeps the last maximum; reverse so ties go to the lowest Quote ID.
    let (best, best_toks) = uncited
        .iter()
        .rev()
        .max_by_key(|(_, toks)| weight(toks))
        .expect("non-empty");

    let top = best_toks
        .iter()
        .map(String::as_str)
        .max_by(|a, b| freq[a].cmp(&freq[b]).then(b.cmp(a)));
    let quotes: BTreeSet<QuoteId> = match top {
        Some(tok) => uncited
            .iter()
            .filter(|(_, toks)| toks.iter().any(|t| t == tok))
            .map(|(u, _)| u.quote_id)
            .collect(),
        None => [best.quote_id].into(),
    };
    let title: Vec<&str> = best.text.split_whitespace().take(ADD_TITLE_WORDS).collect();
    let description = match top {
        Some(tok) => format!("Uncited material mentioning '{tok}'"),
        None => "Uncited material".to_string(),
    };
    Some(ThemeDraft::new(title.join(" "), description).with_quotes(quotes))
}
