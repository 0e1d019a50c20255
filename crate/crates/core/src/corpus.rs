//! Transcript ingestion: Quote ID markers, utterances, and chunking.
//!
//! Transcripts are plain UTF-8 text in which every utterance is introduced
//! by a marker of the form `[P<participant>_S<sequence>]`. Everything up to
//! the next marker belongs to the preceding one. Any occurrence of `[P` is
//! treated as a marker candidate and must be well formed.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::str::FromStr;

use regex::Regex;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::sync::OnceLock;
use thiserror::Error;

/// Default chunk size, in whitespace-delimited words.
pub const DEFAULT_CHUNK_LIMIT: usize = 1500;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CorpusError {
    #[error("malformed quote id at byte {offset}: {snippet:?}")]
    MalformedQuoteId { offset: usize, snippet: String },
    #[error("duplicate quote id {quote_id} in transcript {transcript}")]
    DuplicateQuoteId { quote_id: QuoteId, transcript: String },
    #[error("quote id {quote_id} appears in both {first} and {second}")]
    CrossTranscriptDuplicate {
        quote_id: QuoteId,
        first: String,
        second: String,
    },
    #[error("transcript {0} contains no quote id markers")]
    EmptyTranscript(String),
    #[error("utterance {0} has no text")]
    EmptyUtterance(QuoteId),
    #[error("chunk limit must be at least 1")]
    InvalidChunkLimit,
}

/// A `[P#_S###]` marker. Participant and sequence are both positive; the
/// canonical rendering zero-pads the sequence to three digits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct QuoteId {
    pub participant: u32,
    pub sequence: u32,
}

impl QuoteId {
    pub fn new(participant: u32, sequence: u32) -> Option<Self> {
        (participant > 0 && sequence > 0).then_some(Self {
            participant,
            sequence,
        })
    }

    /// The exact source token, brackets included.
    pub fn raw(&self) -> String {
        self.to_string()
    }

    pub fn speaker(&self) -> String {
        format!("P{}", self.participant)
    }
}

impl fmt::Display for QuoteId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[P{}_S{:03}]", self.participant, self.sequence)
    }
}

fn marker_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"^\[P([0-9]+)_S([0-9]+)\]").unwrap())
}

/// Parses a marker at the start of `s`, returning the id and its byte length.
/// `None` means the text at `s` is not a canonical marker.
fn parse_marker_prefix(s: &str) -> Option<(QuoteId, usize)> {
    let caps = marker_regex().captures(s)?;
    let whole = caps.get(0)?.as_str();
    let participant: u32 = caps[1].parse().ok()?;
    let sequence: u32 = caps[2].parse().ok()?;
    let id = QuoteId::new(participant, sequence)?;
    // Reject non-canonical spellings such as [P01_S002] or [P1_S02].
    (id.raw() == whole).then_some((id, whole.len()))
}

impl FromStr for QuoteId {
    type Err = CorpusError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let trimmed = s.trim();
        match parse_marker_prefix(trimmed) {
            Some((id, len)) if len == trimmed.len() => Ok(id),
            _ => Err(CorpusError::MalformedQuoteId {
                offset: 0,
                snippet: snippet_at(trimmed, 0),
            }),
        }
    }
}

impl Serialize for QuoteId {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for QuoteId {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Finds every canonical quote id mentioned anywhere in `text`, in order of
/// appearance. Malformed candidates are skipped.
pub fn scan_quote_ids(text: &str) -> Vec<QuoteId> {
    let mut out = Vec::new();
    for (offset, _) in text.match_indices("[P") {
        if let Some((id, _)) = parse_marker_prefix(&text[offset..]) {
            out.push(id);
        }
    }
    out
}

fn snippet_at(s: &str, offset: usize) -> String {
    s[offset..].chars().take(16).collect()
}

/// Number of whitespace-delimited tokens.
pub fn word_count(text: &str) -> usize {
    text.split_whitespace().count()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Utterance {
    pub quote_id: QuoteId,
    pub speaker: String,
    pub text: String,
    pub word_count: usize,
}

impl Utterance {
    pub fn new(quote_id: QuoteId, text: impl Into<String>) -> Result<Self, CorpusError> {
        let text = text.into().trim().to_string();
        if text.is_empty() {
            return Err(CorpusError::EmptyUtterance(quote_id));
        }
        Ok(Self {
            quote_id,
            speaker: quote_id.speaker(),
            word_count: word_count(&text),
            text,
        })
    }
}

#[derive(Serialize, Deserialize)]
struct UtteranceRepr {
    quote_id: QuoteId,
    speaker: String,
    text: String,
}

impl Serialize for Utterance {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        UtteranceRepr {
            quote_id: self.quote_id,
            speaker: self.speaker.clone(),
            text: self.text.clone(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Utterance {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let repr = UtteranceRepr::deserialize(deserializer)?;
        let mut u = Utterance::new(repr.quote_id, repr.text).map_err(serde::de::Error::custom)?;
        u.speaker = repr.speaker;
        Ok(u)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transcript {
    pub id: String,
    pub utterances: Vec<Utterance>,
    pub total_words: usize,
}

impl Transcript {
    /// Builds a transcript, enforcing per-transcript quote id uniqueness.
    pub fn new(id: impl Into<String>, utterances: Vec<Utterance>) -> Result<Self, CorpusError> {
        let id = id.into();
        let mut seen = HashSet::new();
        for u in &utterances {
            if !seen.insert(u.quote_id) {
                return Err(CorpusError::DuplicateQuoteId {
                    quote_id: u.quote_id,
                    transcript: id,
                });
            }
        }
        let total_words = utterances.iter().map(|u| u.word_count).sum();
        Ok(Self {
            id,
            utterances,
            total_words,
        })
    }

    pub fn quote_ids(&self) -> impl Iterator<Item = QuoteId> + '_ {
        self.utterances.iter().map(|u| u.quote_id)
    }

    /// Renders back to the marker text format, one utterance per line.
    pub fn render(&self) -> String {
        render_utterances(&self.utterances)
    }
}

pub(crate) fn render_utterances(utterances: &[Utterance]) -> String {
    let mut out = String::new();
    for u in utterances {
        out.push_str(&u.quote_id.raw());
        out.push(' ');
        out.push_str(&u.text);
        out.push('\n');
    }
    out
}

#[derive(Serialize, Deserialize)]
struct TranscriptRepr {
    id: String,
    utterances: Vec<Utterance>,
}

impl Serialize for Transcript {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        TranscriptRepr {
            id: self.id.clone(),
            utterances: self.utterances.clone(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Transcript {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let repr = TranscriptRepr::deserialize(deserializer)?;
        Transcript::new(repr.id, repr.utterances).map_err(serde::de::Error::custom)
    }
}

/// Parses marker-annotated text into a [`Transcript`].
pub fn parse_transcript(raw_text: &str, transcript_id: &str) -> Result<Transcript, CorpusError> {
    let mut markers: Vec<(usize, usize, QuoteId)> = Vec::new();
    for (offset, _) in raw_text.match_indices("[P") {
        match parse_marker_prefix(&raw_text[offset..]) {
            Some((id, len)) => markers.push((offset, len, id)),
            None => {
                return Err(CorpusError::MalformedQuoteId {
                    offset,
                    snippet: snippet_at(raw_text, offset),
                })
            }
        }
    }

    let Some(&(first, _, _)) = markers.first() else {
        return Err(CorpusError::EmptyTranscript(transcript_id.to_string()));
    };
    if !raw_text[..first].trim().is_empty() {
        return Err(CorpusError::MalformedQuoteId {
            offset: 0,
            snippet: snippet_at(raw_text, 0),
        });
    }

    let mut utterances = Vec::with_capacity(markers.len());
    for (i, &(offset, len, id)) in markers.iter().enumerate() {
        let end = markers.get(i + 1).map_or(raw_text.len(), |m| m.0);
        utterances.push(Utterance::new(id, &raw_text[offset + len..end])?);
    }
    Transcript::new(transcript_id, utterances)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Chunk {
    pub transcript_id: String,
    pub index: usize,
    pub utterances: Vec<Utterance>,
    pub word_count: usize,
}

impl Chunk {
    pub fn quote_ids(&self) -> impl Iterator<Item = QuoteId> + '_ {
        self.utterances.iter().map(|u| u.quote_id)
    }

    pub fn contains(&self, id: &QuoteId) -> bool {
        self.utterances.iter().any(|u| &u.quote_id == id)
    }

    /// Stable reference used in prompts and audit records.
    pub fn reference(&self) -> String {
        format!("{}#{}", self.transcript_id, self.index)
    }

    pub fn render(&self) -> String {
        render_utterances(&self.utterances)
    }
}

/// Greedy packing of whole utterances into chunks of at most `chunk_limit`
/// words. An utterance longer than the limit gets a chunk of its own.
pub fn chunk_transcript(t: &Transcript, chunk_limit: usize) -> Result<Vec<Chunk>, CorpusError> {
    if chunk_limit == 0 {
        return Err(CorpusError::InvalidChunkLimit);
    }
    let mut chunks = Vec::new();
    let mut current: Vec<Utterance> = Vec::new();
    let mut words = 0usize;

    let mut flush = |current: &mut Vec<Utterance>, words: &mut usize| {
        if !current.is_empty() {
            chunks.push(Chunk {
                transcript_id: t.id.clone(),
                index: chunks.len(),
                utterances: std::mem::take(current),
                word_count: *words,
            });
            *words = 0;
        }
    };

    for u in &t.utterances {
        if !current.is_empty() && words + u.word_count > chunk_limit {
            flush(&mut current, &mut words);
        }
        words += u.word_count;
        current.push(u.clone());
    }
    flush(&mut current, &mut words);
    Ok(chunks)
}

/// A set of transcripts whose quote ids are unique across the whole corpus.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Corpus {
    transcripts: Vec<Transcript>,
    #[serde(skip)]
    index: BTreeMap<QuoteId, (usize, usize)>,
}

impl Corpus {
    pub fn new(transcripts: Vec<Transcript>) -> Result<Self, CorpusError> {
        let mut index: BTreeMap<QuoteId, (usize, usize)> = BTreeMap::new();
        for (ti, t) in transcripts.iter().enumerate() {
            for (ui, u) in t.utterances.iter().enumerate() {
                if let Some(&(prev, _)) = index.get(&u.quote_id) {
                    return Err(CorpusError::CrossTranscriptDuplicate {
                        quote_id: u.quote_id,
                        first: transcripts[prev].id.clone(),
                        second: t.id.clone(),
                    });
                }
                index.insert(u.quote_id, (ti, ui));
            }
        }
        Ok(Self { transcripts, index })
    }

    pub fn transcripts(&self) -> &[Transcript] {
        &self.transcripts
    }

    pub fn len(&self) -> usize {
        self.transcripts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transcripts.is_empty()
    }

    pub fn quote_ids(&self) -> impl Iterator<Item = QuoteId> + '_ {
        self.index.keys().copied()
    }

    pub fn quote_count(&self) -> usize {
        self.index.len()
    }

    pub fn contains(&self, id: &QuoteId) -> bool {
        self.index.contains_key(id)
    }

    pub fn utterance(&self, id: &QuoteId) -> Option<&Utterance> {
        self.index
            .get(id)
            .map(|&(t, u)| &self.transcripts[t].utterances[u])
    }

    /// Id of the transcript that holds `id`.
    pub fn transcript_of(&self, id: &QuoteId) -> Option<&str> {
        self.index
            .get(id)
            .map(|&(t, _)| self.transcripts[t].id.as_str())
    }

    /// Utterances in corpus order (transcript order, then source order).
    pub fn utterances(&self) -> impl Iterator<Item = &Utterance> {
        self.transcripts.iter().flat_map(|t| t.utterances.iter())
    }

    pub fn chunks(&self, chunk_limit: usize) -> Result<Vec<Chunk>, CorpusError> {
        let mut all = Vec::new();
        for t in &self.transcripts {
            all.extend(chunk_transcript(t, chunk_limit)?);
        }
        Ok(all)
    }

    /// Number of transcripts touched by a set of quote ids.
    pub fn transcripts_spanned<'a>(&self, ids: impl IntoIterator<Item = &'a QuoteId>) -> usize {
        ids.into_iter()
            .filter_map(|id| self.index.get(id).map(|&(t, _)| t))
            .collect::<HashSet<_>>()
            .len()
    }
}
