//! The run report written as `report.json`, and theme-list files used for
//! alignment against human themes.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::metrics::{AlignmentReport, DependabilityReport, TransferabilityReport};
use crate::model::ThemeSet;
use crate::pipeline::RunOutput;

/// Bumped whenever the report layout changes.
pub const REPORT_VERSION: u32 = 1;

/// The JSON schema `report.json` conforms to.
pub const REPORT_SCHEMA: &str = include_str!("../schemas/report.schema.json");

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    pub std: f64,
    /// Pairs (dependability) or splits (transferability) evaluated.
    pub n: usize,
}

impl From<&DependabilityReport> for Stat {
    fn from(r: &DependabilityReport) -> Self {
        Self {
            mean: r.mean,
            std: r.std,
            n: r.pairs.len(),
        }
    }
}

impl From<&TransferabilityReport> for Stat {
    fn from(r: &TransferabilityReport) -> Self {
        Self {
            mean: r.mean,
            std: r.std,
            n: r.splits.len(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationSummary {
    pub iteration: u32,
    pub theme_set_id: String,
    pub themes: usize,
    pub credibility: f64,
    pub dependability: f64,
    pub transferability: f64,
    pub proposals: usize,
    pub applied_edits: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub version: u32,
    pub run_id: String,
    pub seed: u64,
    pub backend: String,
    pub final_theme_set_id: String,
    pub converged: bool,
    pub codes: usize,
    pub rejected_codes: usize,
    pub credibility: f64,
    pub dependability: Option<Stat>,
    pub transferability: Option<Stat>,
    pub iterations: Vec<IterationSummary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alignment: Option<AlignmentReport>,
}

impl Report {
    pub fn from_run(run: &RunOutput) -> Self {
        let iterations: Vec<IterationSummary> = run
            .audit
            .records
            .iter()
            .map(|r| IterationSummary {
                iteration: r.iteration,
                theme_set_id: r.theme_set.id.clone(),
                themes: r.theme_set.len(),
                credibility: r.score.credibility,
                dependability: r.score.dependability,
                transferability: r.score.transferability,
                proposals: r.proposals.len(),
                applied_edits: r.applied_edits.iter().filter(|a| a.applied).count(),
                converged: r.converged,
            })
            .collect();
        let last = iterations.last();
        Self {
            version: REPORT_VERSION,
            run_id: run.audit.run_id.clone(),
            seed: run.audit.seed,
            backend: run.audit.backend.clone(),
            final_theme_set_id: last.map(|l| l.theme_set_id.clone()).unwrap_or_default(),
            converged: run.converged,
            codes: run.codes.len(),
            rejected_codes: run.rejected_codes,
            credibility: last.map_or(0.0, |l| l.credibility),
            dependability: run.dependability.as_ref().map(Stat::from),
            transferability: run.final_transferability.as_ref().map(Stat::from),
            iterations,
            alignment: None,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ThemeListError {
    #[error("line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ListedTheme {
    pub title: String,
    #[serde(default)]
    pub description: Option<String>,
}

impl ListedTheme {
    pub fn text(&self) -> String {
        match self.description.as_deref().map(str::trim) {
            Some(d) if !d.is_empty() => format!("{} {d}", self.title.trim()),
            _ => self.title.trim().to_string(),
        }
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum ThemeListFile {
    List(Vec<ListedTheme>),
    Set(ThemeSet),
}

/// Theme texts from either a JSON list of `{title, description?}` or a
/// saved theme set.
pub fn parse_theme_list(json: &str) -> Result<Vec<String>, ThemeListError> {
    let parsed: ThemeListFile = serde_json::from_str(json).map_err(|e| {
        // Untagged enums lose the position; re-parse for a located error.
        let e = serde_json::from_str::<Vec<ListedTheme>>(json).err().unwrap_or(e);
        ThemeListError::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        }
    })?;
    Ok(match parsed {
        ThemeListFile::List(items) => items.iter().map(ListedTheme::text).collect(),
        ThemeListFile::Set(ts) => ts.themes.iter().map(|t| t.text()).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ThemeDraft;

    #[test]
    fn theme_list_forms() {
        let l = parse_theme_list(r#"[{"title": "Fear"}, {"title": "Cost", "description": "bills"}]"#).unwrap();
        assert_eq!(l, vec!["Fear", "Cost bills"]);

        let mut ts = ThemeSet::new("s", vec![]);
        ts.push(ThemeDraft::new("A", "b"));
        let l = parse_theme_list(&serde_json::to_string(&ts).unwrap()).unwrap();
        assert_eq!(l, vec!["A b"]);

        let err = parse_theme_list("[\n{\"title\": 3}\n]").unwrap_err();
        let ThemeListError::Parse { line, .. } = err;
        assert_eq!(line, 2);
    }
}
