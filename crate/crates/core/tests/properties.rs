//! Property tests over the public API.

use std::collections::BTreeSet;

use autota::agents::AgentContext;
use autota::corpus::{chunk_transcript, parse_transcript, Corpus, QuoteId, Transcript};
use autota::metrics::{credibility, edit_distance, levenshtein_similarity, rouge_bidirectional, sentence_bleu};
use autota::model::{apply_edit, EditKind, EditProposal, ThemeDraft, ThemeSet};
use autota::pipeline::{Pipeline, PipelineConfig};
use autota::refine::{apply_batch, RefineConfig};
use autota::reward::{mse_gradients, mse_loss, FeatureVector, FEATURE_DIM};
use proptest::prelude::*;

const WORDS: &[&str] = &["fear", "heart", "waiting", "nurse", "cost", "trust", "sleep", "the", "and", "child"];

fn sentence(max: usize) -> impl Strategy<Value = String> {
    prop::collection::vec(prop::sample::select(WORDS), 1..=max).prop_map(|w| w.join(" "))
}

/// Participant, sorted distinct sequence numbers and one sentence each.
fn utterances() -> impl Strategy<Value = (u32, Vec<(u32, String)>)> {
    (1u32..20, prop::collection::btree_set(1u32..500, 1..25)).prop_flat_map(|(p, seqs)| {
        let n = seqs.len();
        (Just(p), Just(seqs), prop::collection::vec(sentence(12), n))
            .prop_map(|(p, seqs, texts)| (p, seqs.into_iter().zip(texts).collect()))
    })
}

fn render(p: u32, utts: &[(u32, String)]) -> String {
    utts.iter().map(|(s, t)| format!("[P{p}_S{s:03}] {t}\n")).collect()
}

fn corpus_of(specs: &[(u32, Vec<(u32, String)>)]) -> Corpus {
    let ts: Vec<Transcript> = specs
        .iter()
        .enumerate()
        .map(|(i, (_, utts))| {
            // one participant per transcript keeps Quote IDs corpus-unique
            let p = i as u32 + 1;
            parse_transcript(&render(p, utts), &format!("t{p}")).unwrap()
        })
        .collect();
    Corpus::new(ts).unwrap()
}

proptest! {
    #[test]
    fn parse_render_round_trip((p, utts) in utterances()) {
        let t = parse_transcript(&render(p, &utts), "x").unwrap();
        prop_assert_eq!(t.utterances.len(), utts.len());
        for (u, (s, text)) in t.utterances.iter().zip(&utts) {
            prop_assert_eq!(u.quote_id, QuoteId::new(p, *s).unwrap());
            prop_assert_eq!(&u.text, text);
        }
        let again = parse_transcript(&t.render(), "x").unwrap();
        prop_assert_eq!(again, t);
    }

    #[test]
    fn chunks_partition_greedily((p, utts) in utterances(), limit in 1usize..60) {
        let t = parse_transcript(&render(p, &utts), "x").unwrap();
        let chunks = chunk_transcript(&t, limit).unwrap();
        let flat: Vec<_> = chunks.iter().flat_map(|c| c.utterances.clone()).collect();
        prop_assert_eq!(&flat, &t.utterances);
        for (i, c) in chunks.iter().enumerate() {
            prop_assert_eq!(c.index, i);
            prop_assert!(c.word_count <= limit || c.utterances.len() == 1);
            prop_assert_eq!(c.word_count, c.utterances.iter().map(|u| u.word_count).sum::<usize>());
            if let Some(next) = chunks.get(i + 1) {
                // greedy: the next utterance would not have fit
                prop_assert!(c.word_count + next.utterances[0].word_count > limit);
            }
        }
    }

    #[test]
    fn lexical_metrics_are_symmetric_and_bounded(a in sentence(10), b in sentence(10), n in 1usize..3) {
        let r = rouge_bidirectional(&a, &b, n);
        prop_assert_eq!(r, rouge_bidirectional(&b, &a, n));
        prop_assert!((0.0..=1.0).contains(&r));
        prop_assert_eq!(rouge_bidirectional(&a, &a, n), 1.0);
        let l = levenshtein_similarity(&a, &b);
        prop_assert_eq!(l, levenshtein_similarity(&b, &a));
        prop_assert!((0.0..=1.0).contains(&l));
        let bl = sentence_bleu(&a, &b);
        prop_assert!((0.0..=1.0 + 1e-12).contains(&bl));
    }

    #[test]
    fn edit_distance_is_a_metric(a in "[a-c]{0,8}", b in "[a-c]{0,8}", c in "[a-c]{0,8}") {
        prop_assert_eq!(edit_distance(&a, &b), edit_distance(&b, &a));
        prop_assert_eq!(edit_distance(&a, &a), 0);
        prop_assert!(edit_distance(&a, &c) <= edit_distance(&a, &b) + edit_distance(&b, &c));
    }

    #[test]
    fn credibility_is_monotone(cited in prop::collection::btree_set(1u32..40, 0..40), extra in 1u32..40) {
        let corpus: BTreeSet<QuoteId> = (1..=30).map(|s| QuoteId::new(1, s).unwrap()).collect();
        let mut ts = ThemeSet::new("x", vec![]);
        ts.push(ThemeDraft::new("a", "").with_quotes(cited.iter().map(|&s| QuoteId::new(1, s).unwrap())));
        let before = credibility(&ts, &corpus).unwrap();
        ts.push(ThemeDraft::new("b", "").with_quotes([QuoteId::new(1, extra).unwrap()]));
        let after = credibility(&ts, &corpus).unwrap();
        prop_assert!((0.0..=100.0).contains(&before));
        prop_assert!(after >= before);
    }

    #[test]
    fn gradients_match_finite_differences(
        rows in prop::collection::vec((prop::array::uniform6(-2.0f64..2.0), 0u8..2), 1..15),
        w in prop::array::uniform6(-1.0f64..1.0),
        b in -1.0f64..1.0,
    ) {
        let data: Vec<(FeatureVector, f64)> =
            rows.iter().map(|(x, r)| (FeatureVector::new(*x).unwrap(), f64::from(*r))).collect();
        let (gw, gb) = mse_gradients(&w, b, &data);
        let h = 1e-5;
        for i in 0..FEATURE_DIM {
            let (mut up, mut down) = (w, w);
            up[i] += h;
            down[i] -= h;
            let fd = (mse_loss(&up, b, &data) - mse_loss(&down, b, &data)) / (2.0 * h);
            prop_assert!((gw[i] - fd).abs() <= 1e-6 * (1.0 + fd.abs()));
        }
        let fd = (mse_loss(&w, b + h, &data) - mse_loss(&w, b - h, &data)) / (2.0 * h);
        prop_assert!((gb - fd).abs() <= 1e-6 * (1.0 + fd.abs()));
    }

    #[test]
    fn batches_apply_every_heuristic_shape(n in 0usize..6, deletes in prop::collection::vec(0usize..6, 0..3)) {
        let mut ts = ThemeSet::new("x", vec![]);
        for i in 0..n {
            ts.push(ThemeDraft::new(format!("t{i}"), "").with_quotes([QuoteId::new(1, i as u32 + 1).unwrap()]));
        }
        let mut proposals: Vec<EditProposal> = deletes
            .iter()
            .filter_map(|&i| ts.themes.get(i).map(|t| EditProposal::delete(t.id, "")))
            .collect();
        proposals.push(EditProposal::add(ThemeDraft::new("new", ""), ""));
        let (out, applied) = apply_batch(&ts, &proposals);
        prop_assert_eq!(applied.len(), proposals.len());
        let deleted = applied.iter().filter(|a| a.applied && a.kind == EditKind::Delete).count();
        prop_assert_eq!(out.len(), ts.len() - deleted + 1);
        // single edits agree with the batch on their own
        if let Some(p) = proposals.first() {
            prop_assert!(apply_edit(&ts, p).is_ok());
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn loop_terminates_within_cap(
        specs in prop::collection::vec(utterances(), 1..4),
        max_iterations in 1u32..6,
        seed in any::<u64>(),
    ) {
        let corpus = corpus_of(&specs);
        let config = PipelineConfig {
            seed,
            chunk_limit: 40,
            refine: RefineConfig { max_iterations, final_transferability: false, ..RefineConfig::default() },
            ..PipelineConfig::default()
        };
        let out = Pipeline::new(AgentContext::mock(), config).run(&corpus).unwrap();
        prop_assert!(out.audit.records.len() <= max_iterations as usize + 1);
        prop_assert!(out.audit.validate().is_ok());
        let ids: BTreeSet<QuoteId> = corpus.quote_ids().collect();
        for r in &out.audit.records {
            prop_assert!(r.theme_set.cited_quotes().is_subset(&ids));
        }
    }
}
