//! The line-oriented exchange format between agents and backends.
//!
//! ```text
//! CODE: <label> | QUOTES: [P1_S002], [P1_S004] | DESC: <text>
//! THEME: <title> | ID: <id> | QUOTES: ... | CODES: <a>; <b> | DESC: <text>
//! EDIT: <ADD|SPLIT|COMBINE|DELETE> | TARGETS: 1, 2 | DRAFT: <title> :: <desc> :: <quotes> | WHY: <text>
//! ```
//!
//! Keys are case-insensitive, whitespace around separators is ignored,
//! Markdown fences and list bullets are skipped, and a lone `NONE` line is an
//! explicit empty answer. Lines that do not fit are dropped; a response with
//! no usable line at all is an error.

use std::fmt::Write as _;

use thiserror::Error;

use crate::corpus::{scan_quote_ids, QuoteId};
use crate::model::{Code, EditKind, EditProposal, Theme, ThemeDraft, ThemeId};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("response contains no parseable {expected} lines")]
pub struct ResponseError {
    pub expected: &'static str,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedCode {
    pub label: String,
    pub description: String,
    pub quote_ids: Vec<QuoteId>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedTheme {
    pub id: Option<ThemeId>,
    pub title: String,
    pub description: String,
    pub quote_ids: Vec<QuoteId>,
    pub code_labels: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedEdit {
    pub kind: EditKind,
    pub targets: Vec<ThemeId>,
    pub drafts: Vec<ThemeDraft>,
    pub rationale: String,
}

impl ParsedEdit {
    pub fn into_proposal(self) -> EditProposal {
        EditProposal {
            kind: self.kind,
            target_theme_ids: self.targets,
            payload: self.drafts,
            rationale: self.rationale,
        }
    }
}

struct Line<'a> {
    head: &'a str,
    fields: Vec<(String, &'a str)>,
}

impl<'a> Line<'a> {
    fn get(&self, key: &str) -> Option<&'a str> {
        self.fields.iter().find(|(k, _)| k == key).map(|(_, v)| *v)
    }

    fn get_all<'s>(&'s self, key: &'s str) -> impl Iterator<Item = &'a str> + 's {
        self.fields.iter().filter(move |(k, _)| k == key).map(|(_, v)| *v)
    }
}

fn strip_bullet(line: &str) -> &str {
    let line = line.trim();
    for bullet in ["- ", "* ", "• "] {
        if let Some(rest) = line.strip_prefix(bullet) {
            return rest.trim_start();
        }
    }
    line
}

fn strip_prefix_ci<'a>(line: &'a str, prefix: &str) -> Option<&'a str> {
    let head = line.get(..prefix.len())?;
    head.eq_ignore_ascii_case(prefix)
        .then(|| &line[prefix.len()..])
}

/// Splits `response` into lines starting with `prefix`, and reports whether
/// an explicit `NONE` answer was present.
fn structured_lines<'a>(response: &'a str, prefix: &str) -> (Vec<Line<'a>>, bool) {
    let mut lines = Vec::new();
    let mut none = false;
    for raw in response.lines() {
        let line = strip_bullet(raw);
        if line.starts_with("```") {
            continue;
        }
        if line.eq_ignore_ascii_case("none") {
            none = true;
            continue;
        }
        let Some(rest) = strip_prefix_ci(line, prefix) else {
            continue;
        };
        let mut parts = rest.split('|');
        let head = parts.next().unwrap_or("").trim();
        let fields = parts
            .filter_map(|p| {
                let (k, v) = p.split_once(':')?;
                Some((k.trim().to_ascii_uppercase(), v.trim()))
            })
            .collect();
        lines.push(Line { head, fields });
    }
    (lines, none)
}

fn finish<T>(items: Vec<T>, saw_lines: bool, none: bool, expected: &'static str) -> Result<Vec<T>, ResponseError> {
    if items.is_empty() && !none {
        if saw_lines {
            log::warn!("every {expected} line in the response was malformed");
        }
        return Err(ResponseError { expected });
    }
    Ok(items)
}

fn parse_theme_id(s: &str) -> Option<ThemeId> {
    let s = s.trim().trim_start_matches(['#', 'T', 't', 'θ']);
    s.parse().ok().map(ThemeId)
}

fn parse_labels(s: &str) -> Vec<String> {
    s.split(';')
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(str::to_string)
        .collect()
}

pub fn parse_code_response(response: &str) -> Result<Vec<ParsedCode>, ResponseError> {
    let (lines, none) = structured_lines(response, "CODE:");
    let saw = !lines.is_empty();
    let items = lines
        .into_iter()
        .filter_map(|l| {
            let quote_ids = l.get("QUOTES").map(scan_quote_ids).unwrap_or_default();
            if l.head.is_empty() || quote_ids.is_empty() {
                return None;
            }
            Some(ParsedCode {
                label: l.head.to_string(),
                description: l.get("DESC").unwrap_or("").to_string(),
                quote_ids,
            })
        })
        .collect();
    finish(items, saw, none, "CODE")
}

pub fn parse_theme_response(response: &str) -> Result<Vec<ParsedTheme>, ResponseError> {
    let (lines, none) = structured_lines(response, "THEME:");
    let saw = !lines.is_empty();
    let items = lines
        .into_iter()
        .filter(|l| !l.head.is_empty())
        .map(|l| ParsedTheme {
            id: l.get("ID").and_then(parse_theme_id),
            title: l.head.to_string(),
            description: l.get("DESC").unwrap_or("").to_string(),
            quote_ids: l.get("QUOTES").map(scan_quote_ids).unwrap_or_default(),
            code_labels: l.get("CODES").map(parse_labels).unwrap_or_default(),
        })
        .collect();
    finish(items, saw, none, "THEME")
}

fn parse_draft(s: &str) -> ThemeDraft {
    let mut parts = s.splitn(3, "::");
    let title = parts.next().unwrap_or("").trim().to_string();
    let description = parts.next().unwrap_or("").trim().to_string();
    let quotes = parts.next().map(scan_quote_ids).unwrap_or_default();
    ThemeDraft::new(title, description).with_quotes(quotes)
}

pub fn parse_edit_response(response: &str) -> Result<Vec<ParsedEdit>, ResponseError> {
    let (lines, none) = structured_lines(response, "EDIT:");
    let saw = !lines.is_empty();
    let items = lines
        .into_iter()
        .filter_map(|l| {
            let kind: EditKind = l.head.parse().ok()?;
            let targets = l
                .get("TARGETS")
                .map(|t| {
                    t.split([',', ' '])
                        .filter(|s| !s.trim().is_empty())
                        .map(parse_theme_id)
                        .collect::<Option<Vec<_>>>()
                })
                .unwrap_or(Some(Vec::new()))?;
            let drafts = l.get_all("DRAFT").map(parse_draft).collect();
            Some(ParsedEdit {
                kind,
                targets,
                drafts,
                rationale: l.get("WHY").unwrap_or("").to_string(),
            })
        })
        .collect();
    finish(items, saw, none, "EDIT")
}

/// Makes free text safe to embed in a field.
pub fn clean_field(s: &str) -> String {
    s.replace('|', "/")
        .replace("::", ":")
        .split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
}

fn join_quotes<'a>(ids: impl IntoIterator<Item = &'a QuoteId>) -> String {
    ids.into_iter().map(QuoteId::raw).collect::<Vec<_>>().join(", ")
}

pub fn render_codes(codes: &[Code]) -> String {
    if codes.is_empty() {
        return "NONE\n".into();
    }
    let mut out = String::new();
    for c in codes {
        let _ = writeln!(
            out,
            "CODE: {} | QUOTES: {} | DESC: {}",
            clean_field(&c.label),
            join_quotes(&c.quote_ids),
            clean_field(&c.description)
        );
    }
    out
}

/// Renders themes; `with_ids` adds the `ID` field used by revision calls.
pub fn render_themes(themes: &[Theme], with_ids: bool) -> String {
    if themes.is_empty() {
        return "NONE\n".into();
    }
    let mut out = String::new();
    for t in themes {
        let _ = write!(out, "THEME: {}", clean_field(&t.title));
        if with_ids {
            let _ = write!(out, " | ID: {}", t.id);
        }
        let labels: Vec<String> = t
            .source_code_labels
            .iter()
            .map(|l| clean_field(l).replace(';', ","))
            .collect();
        let _ = writeln!(
            out,
            " | QUOTES: {} | CODES: {} | DESC: {}",
            join_quotes(&t.supporting_quote_ids),
            labels.join("; "),
            clean_field(&t.description)
        );
    }
    out
}

pub fn render_edits(edits: &[EditProposal]) -> String {
    if edits.is_empty() {
        return "NONE\n".into();
    }
    let mut out = String::new();
    for e in edits {
        let targets: Vec<String> = e.target_theme_ids.iter().map(ToString::to_string).collect();
        let _ = write!(out, "EDIT: {} | TARGETS: {}", e.kind.as_str(), targets.join(", "));
        for d in &e.payload {
            let _ = write!(
                out,
                " | DRAFT: {} :: {} :: {}",
                clean_field(&d.title),
                clean_field(&d.description),
                join_quotes(&d.quote_ids)
            );
        }
        let _ = writeln!(out, " | WHY: {}", clean_field(&e.rationale));
    }
    out
}
