//! Domain objects shared across the pipeline: codes, themes, theme sets,
//! score vectors, edit proposals and the audit trail.

use std::collections::{BTreeSet, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agents::AgentExchange;
use crate::corpus::{word_count, QuoteId};
use crate::refine::RefineConfig;

/// Advisory upper bound on theme length, in words.
pub const THEME_WORD_LIMIT: usize = 60;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("unknown theme id {0}")]
    UnknownThemeId(ThemeId),
    #[error("{kind:?} expects {expected} target(s), got {got}")]
    ArityMismatch {
        kind: EditKind,
        expected: &'static str,
        got: usize,
    },
    #[error("{0:?} requires a payload")]
    MissingPayload(EditKind),
    #[error("code label is empty")]
    EmptyLabel,
    #[error("code {0:?} cites no quote ids")]
    NoQuotes(String),
    #[error("duplicate theme id {0}")]
    DuplicateThemeId(ThemeId),
    #[error("score component {name} = {value} is outside [0, {max}]")]
    ScoreOutOfRange {
        name: &'static str,
        value: f64,
        max: f64,
    },
}

/// An analytical unit produced by one coder identity.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "CodeRepr")]
pub struct Code {
    pub label: String,
    pub description: String,
    pub quote_ids: BTreeSet<QuoteId>,
    pub role: String,
}

#[derive(Deserialize)]
struct CodeRepr {
    label: String,
    description: String,
    quote_ids: BTreeSet<QuoteId>,
    role: String,
}

impl TryFrom<CodeRepr> for Code {
    type Error = ModelError;
    fn try_from(r: CodeRepr) -> Result<Self, Self::Error> {
        Code::new(r.label, r.description, r.quote_ids, r.role)
    }
}

impl Code {
    pub fn new(
        label: impl Into<String>,
        description: impl Into<String>,
        quote_ids: BTreeSet<QuoteId>,
        role: impl Into<String>,
    ) -> Result<Self, ModelError> {
        let label = label.into().trim().to_string();
        if label.is_empty() {
            return Err(ModelError::EmptyLabel);
        }
        if quote_ids.is_empty() {
            return Err(ModelError::NoQuotes(label));
        }
        Ok(Self {
            label,
            description: description.into().trim().to_string(),
            quote_ids,
            role: role.into(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ThemeId(pub u64);

impl fmt::Display for ThemeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Text and quote hints for a theme that does not exist yet.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ThemeDraft {
    pub title: String,
    #[serde(default)]
    pub description: String,
    #[serde(default)]
    pub quote_ids: BTreeSet<QuoteId>,
    #[serde(default)]
    pub source_code_labels: BTreeSet<String>,
}

impl ThemeDraft {
    pub fn new(title: impl Into<String>, description: impl Into<String>) -> Self {
        Self {
            title: title.into(),
            description: description.into(),
            ..Default::default()
        }
    }

    pub fn with_quotes(mut self, ids: impl IntoIterator<Item = QuoteId>) -> Self {
        self.quote_ids.extend(ids);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Theme {
    pub id: ThemeId,
    pub title: String,
    #[serde(default)]
    pub description: String,
    pub supporting_quote_ids: BTreeSet<QuoteId>,
    #[serde(default)]
    pub source_code_labels: BTreeSet<String>,
    pub word_count: usize,
}

impl Theme {
    pub fn from_draft(id: ThemeId, draft: ThemeDraft) -> Self {
        let title = draft.title.trim().to_string();
        let description = draft.description.trim().to_string();
        let wc = word_count(&title) + word_count(&description);
        if wc > THEME_WORD_LIMIT {
            log::warn!("theme {id} has {wc} words (advisory limit {THEME_WORD_LIMIT})");
        }
        Self {
            id,
            title,
            description,
            supporting_quote_ids: draft.quote_ids,
            source_code_labels: draft.source_code_labels,
            word_count: wc,
        }
    }

    /// Title and description as a single string.
    pub fn text(&self) -> String {
        if self.description.is_empty() {
            self.title.clone()
        } else {
            format!("{} {}", self.title, self.description)
        }
    }
}

/// The iterated object: an ordered set of themes at refinement round
/// `iteration`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ThemeSet {
    pub id: String,
    pub iteration: u32,
    pub transcript_ids: Vec<String>,
    pub themes: Vec<Theme>,
    /// Next id handed out by [`ThemeSet::push`]; ids are never reused.
    pub next_theme_id: u64,
}

impl ThemeSet {
    pub fn new(id: impl Into<String>, transcript_ids: Vec<String>) -> Self {
        Self {
            id: id.into(),
            iteration: 0,
            transcript_ids,
            themes: Vec::new(),
            next_theme_id: 1,
        }
    }

    pub fn len(&self) -> usize {
        self.themes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.themes.is_empty()
    }

    fn alloc_id(&mut self) -> ThemeId {
        let id = ThemeId(self.next_theme_id);
        self.next_theme_id += 1;
        id
    }

    /// Appends a theme built from `draft` and returns its fresh id.
    pub fn push(&mut self, draft: ThemeDraft) -> ThemeId {
        let id = self.alloc_id();
        self.themes.push(Theme::from_draft(id, draft));
        id
    }

    pub fn get(&self, id: ThemeId) -> Option<&Theme> {
        self.themes.iter().find(|t| t.id == id)
    }

    fn position(&self, id: ThemeId) -> Result<usize, ModelError> {
        self.themes
            .iter()
            .position(|t| t.id == id)
            .ok_or(ModelError::UnknownThemeId(id))
    }

    /// Union of supporting quote ids over all themes.
    pub fn cited_quotes(&self) -> BTreeSet<QuoteId> {
        self.themes
            .iter()
            .flat_map(|t| t.supporting_quote_ids.iter().copied())
            .collect()
    }

    /// All theme titles and descriptions joined by newlines.
    pub fn text(&self) -> String {
        self.themes
            .iter()
            .map(Theme::text)
            .collect::<Vec<_>>()
            .join("\n")
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let mut seen = HashSet::new();
        for t in &self.themes {
            if !seen.insert(t.id) {
                return Err(ModelError::DuplicateThemeId(t.id));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreVector {
    /// Percentage of corpus quotes cited by at least one theme, in [0, 100].
    pub credibility: f64,
    pub dependability: f64,
    pub transferability: f64,
}

impl ScoreVector {
    pub fn new(credibility: f64, dependability: f64, transferability: f64) -> Result<Self, ModelError> {
        let check = |name, value: f64, max: f64| {
            if (0.0..=max).contains(&value) {
                Ok(())
            } else {
                Err(ModelError::ScoreOutOfRange { name, value, max })
            }
        };
        check("credibility", credibility, 100.0)?;
        check("dependability", dependability, 1.0)?;
        check("transferability", transferability, 1.0)?;
        Ok(Self {
            credibility,
            dependability,
            transferability,
        })
    }

    /// `<C/100, D, T>`, all on the unit scale.
    pub fn normalized(&self) -> [f64; 3] {
        [
            self.credibility / 100.0,
            self.dependability,
            self.transferability,
        ]
    }

    /// L1 distance between the normalized forms.
    pub fn l1_distance(&self, other: &ScoreVector) -> f64 {
        self.normalized()
            .iter()
            .zip(other.normalized())
            .map(|(a, b)| (a - b).abs())
            .sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum EditKind {
    Add,
    Split,
    Combine,
    Delete,
}

impl EditKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            EditKind::Add => "ADD",
            EditKind::Split => "SPLIT",
            EditKind::Combine => "COMBINE",
            EditKind::Delete => "DELETE",
        }
    }

    /// Order in which a batch of edits is applied.
    pub fn application_rank(&self) -> u8 {
        match self {
            EditKind::Delete => 0,
            EditKind::Combine => 1,
            EditKind::Split => 2,
            EditKind::Add => 3,
        }
    }
}

impl std::str::FromStr for EditKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_uppercase().as_str() {
            "ADD" => Ok(EditKind::Add),
            "SPLIT" => Ok(EditKind::Split),
            "COMBINE" => Ok(EditKind::Combine),
            "DELETE" => Ok(EditKind::Delete),
            other => Err(format!("unknown edit kind {other:?}")),
        }
    }
}

/// A feedback-agent edit directive.
///
/// Target arity: Add takes none, Split and Delete exactly one, Combine two
/// or more distinct themes. Add needs one draft, Split two; Combine may
/// carry one draft naming the merged theme.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EditProposal {
    pub kind: EditKind,
    pub target_theme_ids: Vec<ThemeId>,
    #[serde(default)]
    pub payload: Vec<ThemeDraft>,
    #[serde(default)]
    pub rationale: String,
}

impl EditProposal {
    pub fn new(
        kind: EditKind,
        target_theme_ids: Vec<ThemeId>,
        payload: Vec<ThemeDraft>,
        rationale: impl Into<String>,
    ) -> Result<Self, ModelError> {
        let e = Self {
            kind,
            target_theme_ids,
            payload,
            rationale: rationale.into(),
        };
        e.check_shape()?;
        Ok(e)
    }

    pub fn add(draft: ThemeDraft, rationale: impl Into<String>) -> Self {
        Self {
            kind: EditKind::Add,
            target_theme_ids: vec![],
            payload: vec![draft],
            rationale: rationale.into(),
        }
    }

    pub fn delete(target: ThemeId, rationale: impl Into<String>) -> Self {
        Self {
            kind: EditKind::Delete,
            target_theme_ids: vec![target],
            payload: vec![],
            rationale: rationale.into(),
        }
    }

    pub fn combine(targets: Vec<ThemeId>, rationale: impl Into<String>) -> Result<Self, ModelError> {
        Self::new(EditKind::Combine, targets, vec![], rationale)
    }

    pub fn split(
        target: ThemeId,
        halves: [ThemeDraft; 2],
        rationale: impl Into<String>,
    ) -> Self {
        Self {
            kind: EditKind::Split,
            target_theme_ids: vec![target],
            payload: halves.into(),
            rationale: rationale.into(),
        }
    }

    /// Arity and payload checks that do not depend on a theme set.
    pub fn check_shape(&self) -> Result<(), ModelError> {
        let n = self.target_theme_ids.len();
        let distinct = self.target_theme_ids.iter().collect::<HashSet<_>>().len();
        let (ok, expected) = match self.kind {
            EditKind::Add => (n == 0, "0"),
            EditKind::Split | EditKind::Delete => (n == 1, "1"),
            EditKind::Combine => (n >= 2 && distinct == n, ">=2 distinct"),
        };
        if !ok {
            return Err(ModelError::ArityMismatch {
                kind: self.kind,
                expected,
                got: n,
            });
        }
        let payload_ok = match self.kind {
            EditKind::Add => self.payload.len() == 1,
            EditKind::Split => self.payload.len() == 2,
            EditKind::Combine | EditKind::Delete => true,
        };
        if !payload_ok {
            return Err(ModelError::MissingPayload(self.kind));
        }
        Ok(())
    }
}

/// Applies one edit, returning a new theme set. The input is not modified
/// and the iteration counter is left unchanged.
pub fn apply_edit(ts: &ThemeSet, e: &EditProposal) -> Result<ThemeSet, ModelError> {
    e.check_shape()?;
    let mut out = ts.clone();
    match e.kind {
        EditKind::Add => {
            out.push(e.payload[0].clone());
        }
        EditKind::Delete => {
            let pos = out.position(e.target_theme_ids[0])?;
            out.themes.remove(pos);
        }
        EditKind::Combine => {
            let positions = e
                .target_theme_ids
                .iter()
                .map(|&id| out.position(id))
                .collect::<Result<Vec<_>, _>>()?;
            let first = *positions.iter().min().expect("arity checked");
            let targets: Vec<&Theme> = positions.iter().map(|&p| &out.themes[p]).collect();

            let mut merged = ThemeDraft::default();
            for t in &targets {
                merged.quote_ids.extend(t.supporting_quote_ids.iter().copied());
                merged
                    .source_code_labels
                    .extend(t.source_code_labels.iter().cloned());
            }
            match e.payload.first() {
                Some(d) if !d.title.trim().is_empty() => {
                    merged.title = d.title.clone();
                    merged.description = d.description.clone();
                }
                _ => {
                    let lead = &out.themes[first];
                    merged.title = lead.title.clone();
                    let mut descs: Vec<&str> = Vec::new();
                    for t in &targets {
                        if !t.description.is_empty() && !descs.contains(&t.description.as_str()) {
                            descs.push(&t.description);
                        }
                    }
                    merged.description = descs.join("; ");
                }
            }

            let id = out.alloc_id();
            let merged = Theme::from_draft(id, merged);
            let drop: HashSet<usize> = positions.iter().copied().collect();
            let mut themes = Vec::with_capacity(out.themes.len() + 1 - drop.len());
            for (i, t) in out.themes.drain(..).enumerate() {
                if i == first {
                    themes.push(merged.clone());
                }
                if !drop.contains(&i) {
                    themes.push(t);
                }
            }
            out.themes = themes;
        }
        EditKind::Split => {
            let pos = out.position(e.target_theme_ids[0])?;
            let original = out.themes[pos].clone();
            let hinted: BTreeSet<QuoteId> = e
                .payload
                .iter()
                .flat_map(|d| d.quote_ids.iter().copied())
                .filter(|q| original.supporting_quote_ids.contains(q))
                .collect();
            let unassigned: Vec<QuoteId> = original
                .supporting_quote_ids
                .difference(&hinted)
                .copied()
                .collect();

            let mut halves = Vec::with_capacity(2);
            for d in &e.payload {
                let mut draft = d.clone();
                draft.quote_ids = d
                    .quote_ids
                    .iter()
                    .copied()
                    .filter(|q| original.supporting_quote_ids.contains(q))
                    .chain(unassigned.iter().copied())
                    .collect();
                if draft.source_code_labels.is_empty() {
                    draft.source_code_labels = original.source_code_labels.clone();
                }
                let id = out.alloc_id();
                halves.push(Theme::from_draft(id, draft));
            }
            out.themes.splice(pos..=pos, halves);
        }
    }
    Ok(out)
}

/// Outcome of one proposal within a refinement round.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AppliedEdit {
    pub proposal_index: usize,
    pub kind: EditKind,
    pub applied: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub skipped_reason: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: u32,
    pub theme_set: ThemeSet,
    pub score: ScoreVector,
    pub proposals: Vec<EditProposal>,
    pub applied_edits: Vec<AppliedEdit>,
    pub exchanges: Vec<AgentExchange>,
    pub converged: bool,
}

/// Everything needed to audit (and replay) one pipeline run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditTrail {
    pub run_id: String,
    pub seed: u64,
    pub backend: String,
    pub identities: Vec<String>,
    pub chunk_limit: usize,
    pub refine: RefineConfig,
    pub records: Vec<IterationRecord>,
    /// Backend calls made to produce reference runs for dependability and
    /// transferability scoring.
    pub reference_exchanges: Vec<AgentExchange>,
    pub final_theme_set_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl AuditTrail {
    pub fn final_theme_set(&self) -> Option<&ThemeSet> {
        self.records.last().map(|r| &r.theme_set)
    }

    /// Every recorded backend exchange, loop records first.
    pub fn all_exchanges(&self) -> impl Iterator<Item = &AgentExchange> {
        self.records
            .iter()
            .flat_map(|r| r.exchanges.iter())
            .chain(self.reference_exchanges.iter())
    }

    /// Checks that iterations are contiguous from 0 and that the final id
    /// names the last record's theme set.
    pub fn validate(&self) -> Result<(), String> {
        for (i, r) in self.records.iter().enumerate() {
            if r.iteration as usize != i || r.theme_set.iteration as usize != i {
                return Err(format!("record {i} has iteration {}", r.iteration));
            }
        }
        match (&self.final_theme_set_id, self.final_theme_set()) {
            (Some(id), Some(ts)) if *id == ts.id => Ok(()),
            (None, _) => Ok(()),
            _ => Err("final theme set id does not match the last record".into()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(p: u32, s: u32) -> QuoteId {
        QuoteId::new(p, s).unwrap()
    }

    fn five_themes() -> ThemeSet {
        let mut ts = ThemeSet::new("ts", vec!["t".into()]);
        for i in 1..=5u32 {
            ts.push(ThemeDraft::new(format!("Theme {i}"), "").with_quotes([q(1, i), q(2, i)]));
        }
        ts
    }

    #[test]
    fn combine_unions_quotes() {
        let ts = five_themes();
        let e = EditProposal::combine(vec![ThemeId(2), ThemeId(4)], "dup").unwrap();
        let out = apply_edit(&ts, &e).unwrap();
        assert_eq!(out.len(), 4);
        let expected: BTreeSet<_> = ts
            .get(ThemeId(2))
            .unwrap()
            .supporting_quote_ids
            .union(&ts.get(ThemeId(4)).unwrap().supporting_quote_ids)
            .copied()
            .collect();
        let merged = &out.themes[1];
        assert_eq!(merged.supporting_quote_ids, expected);
        assert_eq!(merged.id, ThemeId(6));
        assert_eq!(merged.title, "Theme 2");
        // input untouched
        assert_eq!(ts.len(), 5);
    }

    #[test]
    fn delete_last_theme() {
        let mut ts = ThemeSet::new("ts", vec![]);
        let id = ts.push(ThemeDraft::new("Only", "").with_quotes([q(1, 1)]));
        let out = apply_edit(&ts, &EditProposal::delete(id, "")).unwrap();
        assert!(out.is_empty());
    }

    #[test]
    fn add_gets_fresh_id() {
        let ts = five_themes();
        let out = apply_edit(
            &ts,
            &EditProposal::add(ThemeDraft::new("Navigating insurance burden", ""), "gap"),
        )
        .unwrap();
        assert_eq!(out.len(), 6);
        let new = out.themes.last().unwrap();
        assert_eq!(new.title, "Navigating insurance burden");
        assert!(ts.get(new.id).is_none());
        out.validate().unwrap();
    }

    #[test]
    fn split_duplicates_unassigned_quotes() {
        let mut ts = ThemeSet::new("ts", vec![]);
        let id = ts.push(ThemeDraft::new("Big", "").with_quotes([q(1, 1), q(1, 2), q(1, 3)]));
        let e = EditProposal::split(
            id,
            [
                ThemeDraft::new("A", "").with_quotes([q(1, 1), q(9, 9)]),
                ThemeDraft::new("B", "").with_quotes([q(1, 2)]),
            ],
            "too broad",
        );
        let out = apply_edit(&ts, &e).unwrap();
        assert_eq!(out.len(), 2);
        let a: Vec<_> = out.themes[0].supporting_quote_ids.iter().copied().collect();
        let b: Vec<_> = out.themes[1].supporting_quote_ids.iter().copied().collect();
        assert_eq!(a, vec![q(1, 1), q(1, 3)]);
        assert_eq!(b, vec![q(1, 2), q(1, 3)]);
    }

    #[test]
    fn arity_and_payload_errors() {
        let ts = five_themes();
        let bad_combine = EditProposal {
            kind: EditKind::Combine,
            target_theme_ids: vec![ThemeId(1)],
            payload: vec![],
            rationale: String::new(),
        };
        assert!(matches!(
            apply_edit(&ts, &bad_combine),
            Err(ModelError::ArityMismatch { .. })
        ));
        let dup_combine = EditProposal {
            target_theme_ids: vec![ThemeId(1), ThemeId(1)],
            ..bad_combine
        };
        assert!(matches!(
            apply_edit(&ts, &dup_combine),
            Err(ModelError::ArityMismatch { .. })
        ));
        let no_payload = EditProposal {
            kind: EditKind::Add,
            target_theme_ids: vec![],
            payload: vec![],
            rationale: String::new(),
        };
        assert_eq!(
            apply_edit(&ts, &no_payload),
            Err(ModelError::MissingPayload(EditKind::Add))
        );
        assert_eq!(
            apply_edit(&ts, &EditProposal::delete(ThemeId(42), "")),
            Err(ModelError::UnknownThemeId(ThemeId(42)))
        );
    }

    #[test]
    fn score_vector_ranges_and_l1() {
        assert!(ScoreVector::new(101.0, 0.5, 0.5).is_err());
        assert!(ScoreVector::new(50.0, -0.1, 0.5).is_err());
        let a = ScoreVector::new(80.0, 0.40, 0.30).unwrap();
        let b = ScoreVector::new(81.0, 0.41, 0.31).unwrap();
        assert!((a.l1_distance(&b) - 0.03).abs() < 1e-12);
    }

    #[test]
    fn code_requires_label_and_quotes() {
        assert_eq!(
            Code::new(" ", "", [q(1, 1)].into(), "r"),
            Err(ModelError::EmptyLabel)
        );
        assert!(matches!(
            Code::new("x", "", BTreeSet::new(), "r"),
            Err(ModelError::NoQuotes(_))
        ));
        assert!(serde_json::from_str::<Code>(
            r#"{"label":"x","description":"","quote_ids":[],"role":"r"}"#
        )
        .is_err());
    }

    #[test]
    fn word_count_covers_title_and_description() {
        let t = Theme::from_draft(ThemeId(1), ThemeDraft::new("Fear of recurrence", "Parents worry."));
        assert_eq!(t.word_count, 5);
    }
}
