//! End-to-end orchestration: chunk → code (k identities) → themes →
//! reference runs → refinement loop, with a complete audit trail.
//!
//! Every generation gets a label that prefixes its exchange references
//! (`<label>/code/<chunk>`, `<label>/themes`, …) and a seed derived from
//! the run seed, so results never depend on scheduling and a recorded run
//! can be replayed call for call.

use std::fmt;
use std::sync::Mutex;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agents::{
    check_identities, code_chunk, default_identities, generate_themes, number_exchanges, AgentContext,
    AgentError, AgentExchange, Identity,
};
use crate::corpus::{Corpus, Transcript, DEFAULT_CHUNK_LIMIT};
use crate::metrics::{
    default_val_size, dependability, enumerate_splits, sample_splits, transferability, DependabilityReport,
    MetricError, Side, Split, TransferabilityReport,
};
use crate::model::{AuditTrail, Code, ThemeSet};
use crate::refine::{refine_loop, theme_set_id, DependabilitySource, LoopRun, RefineConfig, RefineError, Scorer};
use crate::reward::RewardModel;
use crate::seed::derive_seed;

/// Corpora with at least this many transcripts use transcripts as
/// transferability units; smaller ones fall back to chunks.
pub const MIN_TRANSCRIPT_UNITS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Config,
    Parse,
    Chunk,
    Code,
    Themes,
    Dependability,
    Transferability,
    Refine,
    Output,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Stage::Config => "config",
            Stage::Parse => "parse",
            Stage::Chunk => "chunk",
            Stage::Code => "code",
            Stage::Themes => "themes",
            Stage::Dependability => "dependability",
            Stage::Transferability => "transferability",
            Stage::Refine => "refine",
            Stage::Output => "output",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Error)]
#[error("{stage} stage failed: {message}")]
pub struct PipelineError {
    pub stage: Stage,
    pub message: String,
    /// Whatever was recorded before the failure.
    pub audit: Option<Box<AuditTrail>>,
}

impl PipelineError {
    pub fn new(stage: Stage, message: impl fmt::Display) -> Self {
        Self {
            stage,
            message: message.to_string(),
            audit: None,
        }
    }
}

fn agent_stage(e: &AgentError) -> Stage {
    match e {
        AgentError::NoCodes => Stage::Themes,
        _ => Stage::Code,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub run_id: String,
    pub seed: u64,
    pub identities: Vec<Identity>,
    /// Optional perspective for the theme agent; off by default.
    pub theme_identity: Option<Identity>,
    pub chunk_limit: usize,
    pub refine: RefineConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            run_id: "run".into(),
            seed: 0,
            identities: default_identities(),
            theme_identity: None,
            chunk_limit: DEFAULT_CHUNK_LIMIT,
            refine: RefineConfig::default(),
        }
    }
}

/// One iteration-0 generation.
#[derive(Debug, Clone)]
pub struct Generation {
    pub theme_set: ThemeSet,
    /// Sorted by identity, then label, then chunk.
    pub codes: Vec<Code>,
    pub rejected_codes: usize,
    pub exchanges: Vec<AgentExchange>,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub audit: AuditTrail,
    pub codes: Vec<Code>,
    pub rejected_codes: usize,
    pub reference_runs: Vec<ThemeSet>,
    pub dependability: Option<DependabilityReport>,
    /// Sampled-split transferability used inside the loop.
    pub loop_transferability: Option<TransferabilityReport>,
    /// All-split transferability for the final report.
    pub final_transferability: Option<TransferabilityReport>,
    pub converged: bool,
}

impl RunOutput {
    pub fn final_set(&self) -> &ThemeSet {
        self.audit.final_theme_set().expect("successful runs record round 0")
    }
}

pub struct Pipeline {
    pub ctx: AgentContext,
    pub config: PipelineConfig,
    pub reward_model: Option<RewardModel>,
}

/// Units for transferability: transcripts when there are enough of them,
/// otherwise each chunk as a stand-alone transcript.
pub fn transfer_units(corpus: &Corpus, chunk_limit: usize) -> Result<Vec<Transcript>, PipelineError> {
    if corpus.len() >= MIN_TRANSCRIPT_UNITS {
        return Ok(corpus.transcripts().to_vec());
    }
    corpus
        .chunks(chunk_limit)
        .map_err(|e| PipelineError::new(Stage::Chunk, e))?
        .into_iter()
        .map(|c| Transcript::new(c.reference(), c.utterances).map_err(|e| PipelineError::new(Stage::Chunk, e)))
        .collect()
}

impl Pipeline {
    pub fn new(ctx: AgentContext, config: PipelineConfig) -> Self {
        Self {
            ctx,
            config,
            reward_model: None,
        }
    }

    pub fn with_reward_model(mut self, model: Option<RewardModel>) -> Self {
        self.reward_model = model;
        self
    }

    /// Codes every chunk with every identity (concurrently) and groups the
    /// codes into an iteration-0 theme set. A corpus that yields no codes
    /// gives an empty set without a theme-generation call.
    pub fn generate(&self, corpus: &Corpus, label: &str, seed: u64) -> Result<Generation, PipelineError> {
        let chunks = corpus
            .chunks(self.config.chunk_limit)
            .map_err(|e| PipelineError::new(Stage::Chunk, e))?;
        let ids = &self.config.identities;
        let jobs: Vec<(usize, usize)> = (0..chunks.len())
            .flat_map(|c| (0..ids.len()).map(move |i| (c, i)))
            .collect();
        let results = jobs
            .par_iter()
            .map(|&(c, i)| {
                let chunk = &chunks[c];
                let identity = &ids[i];
                let sub_seed = derive_seed(seed, &[&identity.name, &chunk.reference()]);
                let reference = format!("{label}/code/{}", chunk.reference());
                code_chunk(&self.ctx, identity, chunk, sub_seed, reference)
            })
            .collect::<Vec<_>>();

        let mut exchanges = Vec::with_capacity(results.len() + 1);
        let mut codes = Vec::new();
        let mut rejected_codes = 0;
        for r in results {
            let out = r.map_err(|e| PipelineError::new(agent_stage(&e), e))?;
            exchanges.push(out.exchange);
            codes.extend(out.codes);
            rejected_codes += out.rejected.len();
        }
        codes.sort_by(|a, b| (&a.role, &a.label).cmp(&(&b.role, &b.label)));

        let set_id = theme_set_id(label, 0);
        let transcript_ids: Vec<String> = corpus.transcripts().iter().map(|t| t.id.clone()).collect();
        let theme_set = if codes.is_empty() {
            log::warn!("{label}: no codes were produced; starting from an empty theme set");
            ThemeSet::new(set_id, transcript_ids)
        } else {
            let (ts, ex) = generate_themes(
                &self.ctx,
                &codes,
                self.config.theme_identity.as_ref(),
                &set_id,
                transcript_ids,
                derive_seed(seed, &[label, "themes"]),
                format!("{label}/themes"),
            )
            .map_err(|e| PipelineError::new(Stage::Themes, e))?;
            exchanges.push(ex);
            ts
        };
        Ok(Generation {
            theme_set,
            codes,
            rejected_codes,
            exchanges,
        })
    }

    fn reference_label(&self, j: usize) -> String {
        format!("{}.dep{j}", self.config.run_id)
    }

    /// `n` seed-varied iteration-0 generations, as used for dependability.
    pub fn dependability_runs(&self, corpus: &Corpus, n: usize) -> Result<Vec<Generation>, PipelineError> {
        (0..n)
            .map(|j| {
                let seed = derive_seed(self.config.seed, &["dependability", &j.to_string()]);
                self.generate(corpus, &self.reference_label(j), seed)
            })
            .collect()
    }

    /// Transferability over `splits` of `units`, generating a fresh theme set
    /// for each side. Returns the report and the recorded exchanges in
    /// split order.
    pub fn transferability(
        &self,
        units: &[Transcript],
        splits: &[Split],
        prefix: &str,
    ) -> Result<(TransferabilityReport, Vec<AgentExchange>), PipelineError> {
        // (split index, side) -> exchanges, sorted afterwards
        type Log = Vec<((usize, u8), Vec<AgentExchange>)>;
        let recorded: Mutex<Log> = Mutex::new(Vec::new());
        let report = transferability(units, splits, |split, side, picked| {
            let (side_name, side_rank) = match side {
                Side::Train => ("train", 0),
                Side::Val => ("val", 1),
            };
            let corpus = Corpus::new(picked.iter().map(|t| (*t).clone()).collect()).map_err(|e| e.to_string())?;
            let label = format!("{}.{prefix}{}.{side_name}", self.config.run_id, split.index);
            let seed = derive_seed(self.config.seed, &["transferability", &split.index.to_string()]);
            let g = self.generate(&corpus, &label, seed).map_err(|e| e.to_string())?;
            recorded
                .lock()
                .expect("exchange log poisoned")
                .push(((split.index, side_rank), g.exchanges));
            Ok(g.theme_set)
        })
        .map_err(|e| PipelineError::new(Stage::Transferability, e))?;
        let mut recorded = recorded.into_inner().expect("exchange log poisoned");
        recorded.sort_by_key(|(k, _)| *k);
        Ok((report, recorded.into_iter().flat_map(|(_, e)| e).collect()))
    }

    /// Every split of `units`, or a seeded sample of `sample` of them.
    pub fn splits(&self, units: usize, sample: Option<usize>) -> Result<Vec<Split>, MetricError> {
        let all = enumerate_splits(units, default_val_size(units))?;
        Ok(match sample {
            Some(k) => sample_splits(all, k, derive_seed(self.config.seed, &["splits"])),
            None => all,
        })
    }

    fn audit(&self) -> AuditTrail {
        AuditTrail {
            run_id: self.config.run_id.clone(),
            seed: self.config.seed,
            backend: self.ctx.backend.name().to_string(),
            identities: self.config.identities.iter().map(|i| i.name.clone()).collect(),
            chunk_limit: self.config.chunk_limit,
            refine: self.config.refine.clone(),
            records: Vec::new(),
            reference_exchanges: Vec::new(),
            final_theme_set_id: None,
            error: None,
        }
    }

    pub fn run(&self, corpus: &Corpus) -> Result<RunOutput, PipelineError> {
        let mut audit = self.audit();
        let fail = |audit: &AuditTrail, e: PipelineError| {
            let mut audit = audit.clone();
            audit.error = Some(e.to_string());
            PipelineError {
                audit: Some(Box::new(audit)),
                ..e
            }
        };
        let cfg = &self.config.refine;
        check_identities(&self.config.identities).map_err(|e| fail(&audit, PipelineError::new(Stage::Config, e)))?;
        cfg.validate().map_err(|e| fail(&audit, PipelineError::new(Stage::Config, e)))?;
        if corpus.is_empty() {
            return Err(fail(&audit, PipelineError::new(Stage::Parse, "corpus has no transcripts")));
        }

        let main = self
            .generate(corpus, &self.config.run_id, self.config.seed)
            .map_err(|e| fail(&audit, e))?;

        let mut reference_exchanges = Vec::new();
        let refs = self
            .dependability_runs(corpus, cfg.reference_runs)
            .map_err(|e| fail(&audit, PipelineError { stage: Stage::Dependability, ..e }))?;
        let reference_runs: Vec<ThemeSet> = refs.iter().map(|g| g.theme_set.clone()).collect();
        for g in refs {
            reference_exchanges.extend(g.exchanges);
        }

        let units = transfer_units(corpus, self.config.chunk_limit).map_err(|e| fail(&audit, e))?;
        let loop_transferability = if units.len() >= 2 {
            let splits = self
                .splits(units.len(), Some(cfg.loop_transfer_splits))
                .map_err(|e| fail(&audit, PipelineError::new(Stage::Transferability, e)))?;
            let (report, ex) = self
                .transferability(&units, &splits, "loopT")
                .map_err(|e| fail(&audit, e))?;
            reference_exchanges.extend(ex);
            Some(report)
        } else {
            log::warn!("transferability needs at least 2 units, found {}; scoring T as 0", units.len());
            None
        };

        let dep_source = DependabilitySource::AgainstRuns(reference_runs.clone());
        let scorer = Scorer::new(corpus, dep_source, loop_transferability.as_ref().map_or(0.0, |r| r.mean));
        let run = LoopRun {
            ctx: &self.ctx,
            corpus,
            config: cfg,
            scorer: &scorer,
            reward_model: self.reward_model.as_ref(),
            label: &self.config.run_id,
            seed: self.config.seed,
        };
        let outcome = match refine_loop(&run, main.theme_set, main.exchanges) {
            Ok(o) => o,
            Err(f) => {
                audit.records = f.records;
                let stage = match f.error {
                    RefineError::Config(_) | RefineError::MissingRewardModel => Stage::Config,
                    _ => Stage::Refine,
                };
                return Err(fail(&audit, PipelineError::new(stage, f.error)));
            }
        };
        audit.records = outcome.records;
        audit.final_theme_set_id = audit.final_theme_set().map(|t| t.id.clone());

        let final_set = audit.final_theme_set().expect("round 0 recorded").clone();
        let dependability_report = if reference_runs.is_empty() {
            None
        } else {
            let mut all = reference_runs.clone();
            all.push(final_set);
            Some(dependability(&all).map_err(|e| fail(&audit, PipelineError::new(Stage::Dependability, e)))?)
        };

        let final_transferability = if cfg.final_transferability && units.len() >= 2 {
            let splits = self
                .splits(units.len(), None)
                .map_err(|e| fail(&audit, PipelineError::new(Stage::Transferability, e)))?;
            let (report, ex) = self
                .transferability(&units, &splits, "T")
                .map_err(|e| fail(&audit, e))?;
            reference_exchanges.extend(ex);
            Some(report)
        } else {
            loop_transferability.clone()
        };

        let next = audit
            .records
            .iter()
            .flat_map(|r| r.exchanges.iter())
            .map(|e| e.seq + 1)
            .max()
            .unwrap_or(0);
        number_exchanges(&mut reference_exchanges, next);
        audit.reference_exchanges = reference_exchanges;

        Ok(RunOutput {
            audit,
            codes: main.codes,
            rejected_codes: main.rejected_codes,
            reference_runs,
            dependability: dependability_report,
            loop_transferability,
            final_transferability,
            converged: outcome.converged,
        })
    }
}
