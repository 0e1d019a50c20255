//! Synthetic transcripts shared by the integration tests.
#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};

use autota::corpus::{parse_transcript, Corpus, Transcript};
use rand::seq::SliceRandom;
use rand::Rng;

pub const VOCAB: &[&str] = &[
    "worry", "surgery", "heart", "family", "doctor", "waiting", "hospital", "support", "information", "cost",
    "child", "sleep", "fear", "trust", "nurse", "recovery", "the", "and", "was", "really",
];

pub fn words<R: Rng>(rng: &mut R, lo: usize, hi: usize) -> String {
    let n = rng.gen_range(lo..=hi);
    (0..n).map(|_| *VOCAB.choose(rng).unwrap()).collect::<Vec<_>>().join(" ")
}

/// Marker text for participant `p` with `n` utterances.
pub fn transcript_text<R: Rng>(rng: &mut R, p: u32, n: u32) -> String {
    (1..=n)
        .map(|s| format!("[P{p}_S{s:03}] {}\n", words(rng, 3, 15)))
        .collect()
}

pub fn transcript<R: Rng>(rng: &mut R, p: u32, n: u32) -> Transcript {
    parse_transcript(&transcript_text(rng, p, n), &format!("int-{p}")).unwrap()
}

/// `k` transcripts, one participant each, `lo..=hi` utterances apiece.
pub fn corpus<R: Rng>(rng: &mut R, k: u32, lo: u32, hi: u32) -> Corpus {
    let ts = (1..=k)
        .map(|p| {
            let n = rng.gen_range(lo..=hi);
            transcript(rng, p, n)
        })
        .collect();
    Corpus::new(ts).unwrap()
}

/// Writes `k` transcripts into `dir` and returns their paths.
pub fn write_corpus<R: Rng>(rng: &mut R, dir: &Path, k: u32, n: u32) -> Vec<PathBuf> {
    (1..=k)
        .map(|p| {
            let path = dir.join(format!("int-{p:02}.txt"));
            fs::write(&path, transcript_text(rng, p, n)).unwrap();
            path
        })
        .collect()
}

pub fn sample_transcript() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data/sample_transcript.txt")
}
