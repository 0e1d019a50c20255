//! The critique → edit → re-score loop.
//!
//! Round 0 scores and critiques the initial theme set. Each later round
//! applies the previous round's proposals (in the fixed order Delete,
//! Combine, Split, Add), lets the theme agent reword the result, re-scores
//! it and asks the critic again. The loop stops once consecutive
//! normalized score vectors are closer than `convergence_epsilon` in L1,
//! or after `max_iterations` rounds.

pub mod heuristics;
pub mod scoring;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use heuristics::{heuristic_proposals, HeuristicRules};
pub use scoring::{DependabilitySource, Scorer};

use crate::agents::{critique, number_exchanges, revise_themes, AgentContext, AgentError, AgentExchange};
use crate::corpus::Corpus;
use crate::metrics::MetricError;
use crate::model::{apply_edit, AppliedEdit, EditProposal, IterationRecord, ThemeSet, THEME_WORD_LIMIT};
use crate::reward::RewardModel;
use crate::seed::derive_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RefineMode {
    #[default]
    Heuristic,
    RewardGuided,
}

impl std::str::FromStr for RefineMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "heuristic" => Ok(RefineMode::Heuristic),
            "reward_guided" => Ok(RefineMode::RewardGuided),
            other => Err(format!("unknown refine mode {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RefineConfig {
    /// On the normalized `C / 100` scale.
    pub credibility_add_threshold: f64,
    pub levenshtein_combine_threshold: f64,
    /// L1 bound on consecutive normalized score vectors.
    pub convergence_epsilon: f64,
    pub max_iterations: u32,
    pub mode: RefineMode,
    pub split_word_limit: usize,
    /// Extra generations kept for the in-loop dependability score.
    pub reference_runs: usize,
    /// Sampled splits for the in-loop transferability score.
    pub loop_transfer_splits: usize,
    /// Whether the final report evaluates transferability on every split.
    pub final_transferability: bool,
}

impl Default for RefineConfig {
    fn default() -> Self {
        Self {
            credibility_add_threshold: 0.7,
            levenshtein_combine_threshold: 0.20,
            convergence_epsilon: 0.05,
            max_iterations: 5,
            mode: RefineMode::Heuristic,
            split_word_limit: THEME_WORD_LIMIT,
            reference_runs: 2,
            loop_transfer_splits: 6,
            final_transferability: true,
        }
    }
}

impl RefineConfig {
    pub fn validate(&self) -> Result<(), RefineError> {
        let open_unit = |name: &str, v: f64| {
            if v > 0.0 && v < 1.0 {
                Ok(())
            } else {
                Err(RefineError::Config(format!("{name} must lie in (0, 1), got {v}")))
            }
        };
        open_unit("credibility_add_threshold", self.credibility_add_threshold)?;
        open_unit("levenshtein_combine_threshold", self.levenshtein_combine_threshold)?;
        if !(self.convergence_epsilon > 0.0 && self.convergence_epsilon.is_finite()) {
            return Err(RefineError::Config(format!(
                "convergence_epsilon must be positive, got {}",
                self.convergence_epsilon
            )));
        }
        if self.max_iterations < 1 {
            return Err(RefineError::Config("max_iterations must be at least 1".into()));
        }
        Ok(())
    }

    pub fn rules(&self) -> HeuristicRules {
        HeuristicRules {
            credibility_add_threshold: self.credibility_add_threshold,
            levenshtein_combine_threshold: self.levenshtein_combine_threshold,
            split_word_limit: self.split_word_limit,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RefineError {
    #[error("invalid refine config: {0}")]
    Config(String),
    #[error("reward-guided refinement needs a reward model")]
    MissingRewardModel,
    #[error(transparent)]
    Agent(#[from] AgentError),
    #[error(transparent)]
    Metric(#[from] MetricError),
}

/// Applies `proposals` to `ts` in application order (Delete, Combine,
/// Split, Add; original order within a kind). A proposal that no longer
/// applies, e.g. because an earlier edit removed its target, is skipped
/// and reported.
pub fn apply_batch(ts: &ThemeSet, proposals: &[EditProposal]) -> (ThemeSet, Vec<AppliedEdit>) {
    let mut order: Vec<usize> = (0..proposals.len()).collect();
    order.sort_by_key(|&i| (proposals[i].kind.application_rank(), i));
    let mut current = ts.clone();
    let mut applied = Vec::with_capacity(proposals.len());
    for i in order {
        let p = &proposals[i];
        let (ok, reason) = match apply_edit(&current, p) {
            Ok(next) => {
                current = next;
                (true, None)
            }
            Err(e) => {
                log::debug!("skipping {} proposal {i}: {e}", p.kind.as_str());
                (false, Some(e.to_string()))
            }
        };
        applied.push(AppliedEdit {
            proposal_index: i,
            kind: p.kind,
            applied: ok,
            skipped_reason: reason,
        });
    }
    (current, applied)
}

/// Everything the loop needs besides the initial set.
#[derive(Debug, Clone, Copy)]
pub struct LoopRun<'a> {
    pub ctx: &'a AgentContext,
    pub corpus: &'a Corpus,
    pub config: &'a RefineConfig,
    pub scorer: &'a Scorer,
    pub reward_model: Option<&'a RewardModel>,
    /// Prefix for theme-set ids and exchange references.
    pub label: &'a str,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct LoopOutcome {
    pub records: Vec<IterationRecord>,
    pub converged: bool,
}

impl LoopOutcome {
    pub fn final_set(&self) -> &ThemeSet {
        &self.records.last().expect("loop records round 0").theme_set
    }
}

/// A loop that stopped on an error, with the rounds completed before it.
#[derive(Debug, Clone)]
pub struct LoopFailure {
    pub records: Vec<IterationRecord>,
    pub error: RefineError,
}

impl std::fmt::Display for LoopFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "after {} round(s): {}", self.records.len(), self.error)
    }
}

impl std::error::Error for LoopFailure {}

pub fn theme_set_id(label: &str, iteration: u32) -> String {
    format!("{label}-t{iteration}")
}

/// Runs the refinement loop from `initial`. `initial_exchanges` are the
/// coding and theme-generation calls behind `initial`; they are recorded
/// in round 0.
pub fn refine_loop(
    run: &LoopRun<'_>,
    initial: ThemeSet,
    initial_exchanges: Vec<AgentExchange>,
) -> Result<LoopOutcome, LoopFailure> {
    let mut records = Vec::new();
    match drive(run, initial, initial_exchanges, &mut records) {
        Ok(converged) => Ok(LoopOutcome { records, converged }),
        Err(error) => Err(LoopFailure { records, error }),
    }
}

fn drive(
    run: &LoopRun<'_>,
    mut initial: ThemeSet,
    mut exchanges: Vec<AgentExchange>,
    records: &mut Vec<IterationRecord>,
) -> Result<bool, RefineError> {
    let cfg = run.config;
    cfg.validate()?;
    if cfg.mode == RefineMode::RewardGuided && run.reward_model.is_none() {
        return Err(RefineError::MissingRewardModel);
    }
    let rules = cfg.rules();
    let round_seed = |what: &str, t: u32| derive_seed(run.seed, &[run.label, what, &t.to_string()]);
    let reference = |what: &str, t: u32| format!("{}/{what}/t{t}", run.label);

    initial.iteration = 0;
    initial.id = theme_set_id(run.label, 0);
    let score = run.scorer.score(&initial)?;
    let c = critique(run.ctx, &initial, score, run.corpus, &rules, round_seed("critique", 0), reference("critique", 0))?;
    exchanges.push(c.exchange);
    let mut next_seq = number_exchanges(&mut exchanges, 0);
    records.push(IterationRecord {
        iteration: 0,
        theme_set: initial,
        score,
        proposals: c.proposals,
        applied_edits: Vec::new(),
        exchanges,
        converged: false,
    });

    for t in 1..=cfg.max_iterations {
        let prev = records.last().expect("round 0 recorded");
        let (edited, applied_edits) = match cfg.mode {
            RefineMode::Heuristic => apply_batch(&prev.theme_set, &prev.proposals),
            RefineMode::RewardGuided => reward_guided_step(run, &prev.theme_set, &prev.proposals)?,
        };
        let (mut ts, revise_ex) = revise_themes(run.ctx, &edited, round_seed("revise", t), reference("revise", t))?;
        ts.iteration = t;
        ts.id = theme_set_id(run.label, t);

        let score = run.scorer.score(&ts)?;
        let distance = score.l1_distance(&prev.score);
        let converged = distance < cfg.convergence_epsilon;
        log::debug!("{}: round {t} score {score:?}, L1 change {distance:.4}", run.label);

        let c = critique(run.ctx, &ts, score, run.corpus, &rules, round_seed("critique", t), reference("critique", t))?;
        let mut exchanges = vec![revise_ex, c.exchange];
        next_seq = number_exchanges(&mut exchanges, next_seq);
        records.push(IterationRecord {
            iteration: t,
            theme_set: ts,
            score,
            proposals: c.proposals,
            applied_edits,
            exchanges,
            converged,
        });
        if converged {
            return Ok(true);
        }
    }
    Ok(false)
}

/// Scores candidate edit subsets with the reward model and keeps the best:
/// every proposal, none, or each proposal alone, in that order (earlier
/// candidates win ties).
fn reward_guided_step(
    run: &LoopRun<'_>,
    ts: &ThemeSet,
    proposals: &[EditProposal],
) -> Result<(ThemeSet, Vec<AppliedEdit>), RefineError> {
    let model = run.reward_model.ok_or(RefineError::MissingRewardModel)?;
    let mut subsets: Vec<Vec<usize>> = vec![(0..proposals.len()).collect(), Vec::new()];
    if proposals.len() > 1 {
        subsets.extend((0..proposals.len()).map(|i| vec![i]));
    }

    let mut best: Option<(f64, ThemeSet, Vec<AppliedEdit>)> = None;
    for subset in subsets {
        let chosen: Vec<EditProposal> = subset.iter().map(|&i| proposals[i].clone()).collect();
        let (candidate, mut applied) = apply_batch(ts, &chosen);
        for a in &mut applied {
            a.proposal_index = subset[a.proposal_index];
        }
        let score = run.scorer.score(&candidate)?;
        let reward = model.score_theme_set(&candidate, &score);
        if best.as_ref().is_none_or(|(b, _, _)| reward > *b) {
            best = Some((reward, candidate, applied));
        }
    }
    let (_, candidate, mut applied) = best.expect("at least one candidate");
    let used: Vec<usize> = applied.iter().map(|a| a.proposal_index).collect();
    for (i, p) in proposals.iter().enumerate() {
        if !used.contains(&i) {
            applied.push(AppliedEdit {
                proposal_index: i,
                kind: p.kind,
                applied: false,
                skipped_reason: Some("not selected by the reward model".into()),
            });
        }
    }
    applied.sort_by_key(|a| (a.kind.application_rank(), a.proposal_index));
    Ok((candidate, applied))
}
