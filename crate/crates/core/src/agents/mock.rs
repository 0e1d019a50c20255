//! Deterministic offline backend.
//!
//! - Coding: the `top_n` most frequent content tokens of the chunk, each
//!   becoming a code that cites every utterance containing it. Frequency
//!   ties are broken by a hash of the request seed, so seed-varied runs can
//!   differ while a fixed seed always reproduces.
//! - Theme generation: connected components of codes that share at least
//!   one Quote ID, titled by the component's most frequent label.
//! - Revision: echoes the theme set unchanged.
//! - Critique: the refinement heuristics, rendered as edit lines.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::hash::Hasher;

use fnv::FnvHasher;

use super::backend::{AgentRequest, Backend, BackendError, Task};
use super::response::{render_codes, render_edits, render_themes};
use crate::corpus::{Chunk, QuoteId};
use crate::metrics::tokenize;
use crate::model::{Code, ThemeDraft, ThemeSet};
use crate::refine::heuristic_proposals;

pub const DEFAULT_TOP_N: usize = 5;

/// Labels listed in a mock theme's description.
const DESCRIPTION_LABELS: usize = 5;

const STOPWORDS: &[&str] = &[
    "a", "about", "above", "after", "again", "against", "all", "also", "am", "an", "and", "any",
    "are", "as", "at", "be", "because", "been", "before", "being", "below", "between", "both",
    "but", "by", "can", "could", "did", "do", "does", "doing", "don", "down", "during", "each",
    "even", "ever", "few", "for", "from", "further", "get", "got", "had", "has", "have", "having",
    "he", "her", "here", "hers", "herself", "him", "himself", "his", "how", "i", "if", "in",
    "into", "is", "it", "its", "itself", "just", "know", "like", "really", "me", "more", "most",
    "much", "my", "myself", "no", "nor", "not", "now", "of", "off", "on", "once", "one", "only",
    "or", "other", "our", "ours", "ourselves", "out", "over", "own", "said", "same", "say",
    "she", "should", "so", "some", "such", "than", "that", "the", "their", "theirs", "them",
    "themselves", "then", "there", "these", "they", "thing", "things", "think", "this", "those",
    "through", "to", "too", "under", "until", "up", "very", "was", "we", "were", "what", "when",
    "where", "which", "while", "who", "whom", "why", "will", "with", "would", "yeah", "you",
    "your", "yours", "yourself", "yourselves", "going", "went", "want", "well", "kind", "lot",
    "didn", "doesn", "isn", "wasn", "weren", "wouldn", "couldn", "shouldn", "won", "let",
];

/// Lowercased tokens that are neither stopwords, nor shorter than three
/// characters, nor free of letters.
pub fn content_tokens(text: &str) -> Vec<String> {
    tokenize(text)
        .into_iter()
        .filter(|t| {
            t.chars().count() >= 3
                && t.chars().any(char::is_alphabetic)
                && !STOPWORDS.contains(&t.as_str())
        })
        .collect()
}

fn tie_hash(seed: u64, token: &str) -> u64 {
    let mut h = FnvHasher::default();
    h.write(&seed.to_le_bytes());
    h.write(token.as_bytes());
    h.finish()
}

/// Keyword codes for one chunk; `role` is left for the caller to assign.
pub fn mock_codes(chunk: &Chunk, top_n: usize, seed: u64) -> Vec<Code> {
    let mut freq: HashMap<String, usize> = HashMap::new();
    let mut cites: HashMap<String, BTreeSet<QuoteId>> = HashMap::new();
    for u in &chunk.utterances {
        for tok in content_tokens(&u.text) {
            *freq.entry(tok.clone()).or_default() += 1;
            cites.entry(tok).or_default().insert(u.quote_id);
        }
    }
    let mut ranked: Vec<(String, usize)> = freq.into_iter().collect();
    ranked.sort_by(|(ta, fa), (tb, fb)| {
        fb.cmp(fa)
            .then_with(|| tie_hash(seed, ta).cmp(&tie_hash(seed, tb)))
            .then_with(|| ta.cmp(tb))
    });
    ranked
        .into_iter()
        .take(top_n)
        .filter_map(|(tok, n)| {
            let quotes = cites.remove(&tok)?;
            let description = format!("'{tok}' comes up {n} times across {} utterances", quotes.len());
            Code::new(tok, description, quotes, "mock").ok()
        })
        .collect()
}

/// Connected components of codes linked by shared Quote IDs, in order of
/// each component's smallest Quote ID.
pub fn mock_themes(codes: &[Code]) -> ThemeSet {
    let n = codes.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    let mut owner: HashMap<QuoteId, usize> = HashMap::new();
    for (i, c) in codes.iter().enumerate() {
        for q in &c.quote_ids {
            match owner.get(q) {
                Some(&j) => {
                    let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                    if ri != rj {
                        parent[ri.max(rj)] = ri.min(rj);
                    }
                }
                None => {
                    owner.insert(*q, i);
                }
            }
        }
    }

    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for i in 0..n {
        let r = find(&mut parent, i);
        groups.entry(r).or_default().push(i);
    }

    let mut drafts: Vec<ThemeDraft> = groups
        .values()
        .map(|members| {
            let mut label_counts: BTreeMap<&str, usize> = BTreeMap::new();
            let mut draft = ThemeDraft::default();
            for &i in members {
                *label_counts.entry(codes[i].label.as_str()).or_default() += 1;
                draft.quote_ids.extend(codes[i].quote_ids.iter().copied());
                draft.source_code_labels.insert(codes[i].label.clone());
            }
            let mut by_count: Vec<(&str, usize)> = label_counts.into_iter().collect();
            by_count.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
            draft.title = by_count[0].0.to_string();
            let listed: Vec<&str> = by_count
                .iter()
                .take(DESCRIPTION_LABELS)
                .map(|(l, _)| *l)
                .collect();
            draft.description = format!("Grouped codes: {}", listed.join(", "));
            draft
        })
        .collect();
    drafts.sort_by_key(|d| d.quote_ids.iter().next().copied());

    let mut ts = ThemeSet::new("mock", vec![]);
    for d in drafts {
        ts.push(d);
    }
    ts
}

#[derive(Debug, Clone)]
pub struct MockBackend {
    top_n: usize,
}

impl MockBackend {
    pub fn new(top_n: usize) -> Self {
        Self { top_n }
    }
}

impl Default for MockBackend {
    fn default() -> Self {
        Self::new(DEFAULT_TOP_N)
    }
}

impl Backend for MockBackend {
    fn name(&self) -> &str {
        "mock"
    }

    fn complete(&self, request: &AgentRequest<'_>) -> Result<String, BackendError> {
        Ok(match request.task {
            Task::Code { chunk } => render_codes(&mock_codes(chunk, self.top_n, request.seed)),
            Task::Themes { codes } => render_themes(&mock_themes(codes).themes, false),
            Task::Revise { themes } => render_themes(&themes.themes, true),
            Task::Critique {
                themes,
                scores,
                corpus,
                rules,
            } => render_edits(&heuristic_proposals(themes, scores, corpus, rules)),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::parse_transcript;

    fn chunk(text: &str) -> Chunk {
        let t = parse_transcript(text, "t").unwrap();
        crate::corpus::chunk_transcript(&t, 10_000).unwrap().remove(0)
    }

    #[test]
    fn repeated_keyword_becomes_code() {
        let c = chunk(
            "[P1_S001] The anxiety never stops.\n[P1_S002] We talked to the surgeon.\n[P2_S001] My anxiety peaks at night, anxiety everywhere.",
        );
        let codes = mock_codes(&c, 5, 0);
        let anxiety = codes.iter().find(|c| c.label == "anxiety").unwrap();
        let cited: Vec<QuoteId> = anxiety.quote_ids.iter().copied().collect();
        assert_eq!(cited, vec![QuoteId::new(1, 1).unwrap(), QuoteId::new(2, 1).unwrap()]);
        assert_eq!(codes[0].label, "anxiety");
    }

    #[test]
    fn stopwords_only_chunk_has_no_codes() {
        let c = chunk("[P1_S001] and the of it was");
        assert!(mock_codes(&c, 5, 0).is_empty());
    }

    #[test]
    fn seed_changes_only_tie_order() {
        let c = chunk("[P1_S001] apple banana cherry damson elder fig grape");
        let a: Vec<_> = (0..20).map(|s| mock_codes(&c, 2, s)).collect();
        assert!(a.iter().all(|codes| codes.len() == 2));
        assert!(a.windows(2).any(|w| w[0] != w[1]));
        assert_eq!(mock_codes(&c, 2, 3), mock_codes(&c, 2, 3));
    }

    #[test]
    fn themes_are_connected_components() {
        let q = |s| QuoteId::new(1, s).unwrap();
        let mk = |l: &str, qs: &[u32]| Code::new(l, "", qs.iter().map(|&s| q(s)).collect(), "r").unwrap();
        let codes = vec![
            mk("fear", &[1, 2]),
            mk("cost", &[5]),
            mk("fear", &[2, 3]),
            mk("worry", &[3]),
            mk("bills", &[5, 6]),
            mk("insurance", &[6]),
        ];
        let ts = mock_themes(&codes);
        assert_eq!(ts.len(), 2);
        assert_eq!(ts.themes[0].title, "fear");
        let q0: Vec<u32> = ts.themes[0].supporting_quote_ids.iter().map(|q| q.sequence).collect();
        assert_eq!(q0, vec![1, 2, 3]);
        let q1: Vec<u32> = ts.themes[1].supporting_quote_ids.iter().map(|q| q.sequence).collect();
        assert_eq!(q1, vec![5, 6]);
        assert_eq!(ts.themes[1].title, "bills");
    }
}
