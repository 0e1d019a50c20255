//! Command implementations. Each returns a value the caller prints; files
//! are written here.

use std::collections::BTreeMap;
use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use autota::agents::{AgentContext, Backend};
use autota::corpus::Corpus;
use autota::metrics::{
    alignment_report, credibility, dependability, AlignmentReport, DependabilityReport, HashedBowProvider,
    TransferabilityReport,
};
use autota::model::{AuditTrail, Code, ScoreVector, ThemeSet};
use autota::pipeline::{transfer_units, Pipeline, RunOutput, Stage};
use autota::report::{parse_theme_list, Report};
use autota::reward::{
    best_of_n_select, parse_reward_records, train_reward_model, Candidate, Criterion, FeatureVector, RewardModel,
    RewardRecord,
};
use autota::seed::derive_seed;
use serde::Serialize;

use crate::config::{load_corpus, RunConfig};
use crate::CliError;

fn read(path: &Path, stage: Stage) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::stage(stage, format!("{}: {e}", path.display())))
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let out = |e: &dyn std::fmt::Display| CliError::stage(Stage::Output, format!("{}: {e}", path.display()));
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| out(&e))?;
    }
    let mut text = serde_json::to_string_pretty(value).map_err(|e| out(&e))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| out(&e))
}

fn build_context(cfg: &RunConfig) -> Result<AgentContext, CliError> {
    let backend: std::sync::Arc<dyn Backend> = cfg.backend.build().map_err(|e| CliError::stage(Stage::Config, e))?;
    let mut ctx = AgentContext::new(backend, &cfg.backend);
    ctx.prompts = cfg.prompts()?;
    Ok(ctx)
}

fn build_pipeline(cfg: &RunConfig) -> Result<Pipeline, CliError> {
    Ok(Pipeline::new(build_context(cfg)?, cfg.pipeline_config()?))
}

fn load_reward_model(path: &Path) -> Result<RewardModel, CliError> {
    serde_json::from_str(&read(path, Stage::Config)?)
        .map_err(|e| CliError::stage(Stage::Config, format!("{}: {e}", path.display())))
}

/// Extra inputs to `run`.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub reward_model: Option<PathBuf>,
    /// Generate this many seed-varied candidates and keep the one the
    /// reward model prefers.
    pub best_of: usize,
    pub human_themes: Option<PathBuf>,
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub out_dir: PathBuf,
    pub report: Report,
}

fn slug(s: &str) -> String {
    let s: String = s
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() { c.to_ascii_lowercase() } else { '_' })
        .collect();
    s.trim_matches('_').to_string()
}

/// Writes `codes/`, `themes/iteration_NNN.json`, `themes.json`, `audit.json`
/// and `report.json`.
fn write_run(out: &Path, run: &RunOutput, report: &Report) -> Result<(), CliError> {
    let mut by_role: BTreeMap<&str, Vec<&Code>> = BTreeMap::new();
    for c in &run.codes {
        by_role.entry(&c.role).or_default().push(c);
    }
    for (role, codes) in by_role {
        write_json(&out.join("codes").join(format!("{}.json", slug(role))), &codes)?;
    }
    for r in &run.audit.records {
        write_json(&out.join("themes").join(format!("iteration_{:03}.json", r.iteration)), &r.theme_set)?;
    }
    write_json(&out.join("themes.json"), run.final_set())?;
    write_json(&out.join("audit.json"), &run.audit)?;
    write_json(&out.join("report.json"), report)
}

fn alignment_for(human: &Path, ts: &ThemeSet) -> Result<AlignmentReport, CliError> {
    let human = parse_theme_list(&read(human, Stage::Parse)?)
        .map_err(|e| CliError::stage(Stage::Parse, format!("{}: {e}", human.display())))?;
    let llm: Vec<String> = ts.themes.iter().map(|t| t.text()).collect();
    alignment_report(&human, &llm, &HashedBowProvider::default()).map_err(|e| CliError::stage(Stage::Output, e))
}

/// The full pipeline. On failure the partial audit trail is written before
/// the error is returned.
pub fn cmd_run(cfg: &RunConfig, opts: &RunOptions) -> Result<RunSummary, CliError> {
    let corpus = load_corpus(&cfg.transcripts)?;
    let reward_model = opts.reward_model.as_deref().map(load_reward_model).transpose()?;
    if opts.best_of > 1 && reward_model.is_none() {
        return Err(CliError::Usage("--best-of needs --reward-model".into()));
    }
    let pipeline = build_pipeline(cfg)?.with_reward_model(reward_model.clone());
    fs::create_dir_all(&cfg.out).map_err(|e| CliError::stage(Stage::Output, format!("{}: {e}", cfg.out.display())))?;

    let run = if opts.best_of > 1 {
        best_of_n(&pipeline, &corpus, opts.best_of, reward_model.as_ref().expect("checked"), &cfg.out)?
    } else {
        execute(&pipeline, &corpus, &cfg.out)?
    };

    let mut report = Report::from_run(&run);
    if let Some(human) = &opts.human_themes {
        report.alignment = Some(alignment_for(human, run.final_set())?);
    }
    write_run(&cfg.out, &run, &report)?;
    Ok(RunSummary {
        out_dir: cfg.out.clone(),
        report,
    })
}

fn execute(pipeline: &Pipeline, corpus: &Corpus, out: &Path) -> Result<RunOutput, CliError> {
    pipeline.run(corpus).map_err(|e| {
        if let Some(audit) = &e.audit {
            if let Err(w) = write_json(&out.join("audit.json"), audit) {
                log::error!("could not write partial audit trail: {w}");
            }
        }
        CliError::stage(e.stage, e.message)
    })
}

#[derive(Serialize)]
struct CandidateSummary {
    run_id: String,
    seed: u64,
    final_theme_set_id: String,
    reward: f64,
    selected: bool,
}

/// Runs `n` seed-varied pipelines in seed order and keeps the one with the
/// highest reward (ties to the lower theme-set id).
fn best_of_n(pipeline: &Pipeline, corpus: &Corpus, n: usize, model: &RewardModel, out: &Path) -> Result<RunOutput, CliError> {
    let mut runs = Vec::with_capacity(n);
    for i in 0..n {
        let mut config = pipeline.config.clone();
        config.seed = derive_seed(pipeline.config.seed, &["candidate", &i.to_string()]);
        config.run_id = format!("{}.c{i}", pipeline.config.run_id);
        let p = Pipeline::new(pipeline.ctx.clone(), config).with_reward_model(pipeline.reward_model.clone());
        runs.push(execute(&p, corpus, out)?);
    }
    let candidates: Vec<Candidate> = runs
        .iter()
        .map(|r| Candidate {
            theme_set: r.final_set().clone(),
            score: r.audit.records.last().expect("round 0").score,
        })
        .collect();
    let (best, _) = best_of_n_select(&candidates, model).map_err(|e| CliError::stage(Stage::Refine, e))?;
    let summary: Vec<CandidateSummary> = runs
        .iter()
        .zip(&candidates)
        .enumerate()
        .map(|(i, (r, c))| CandidateSummary {
            run_id: r.audit.run_id.clone(),
            seed: r.audit.seed,
            final_theme_set_id: c.theme_set.id.clone(),
            reward: model.score_theme_set(&c.theme_set, &c.score),
            selected: i == best,
        })
        .collect();
    write_json(&out.join("candidates.json"), &summary)?;
    Ok(runs.swap_remove(best))
}

pub fn cmd_compare(llm: &Path, human: &Path) -> Result<AlignmentReport, CliError> {
    let parse = |p: &Path| {
        parse_theme_list(&read(p, Stage::Parse)?).map_err(|e| CliError::stage(Stage::Parse, format!("{}: {e}", p.display())))
    };
    let llm = parse(llm)?;
    let human = parse(human)?;
    alignment_report(&human, &llm, &HashedBowProvider::default()).map_err(|e| CliError::stage(Stage::Output, e))
}

#[derive(Debug, Clone, Serialize)]
pub struct Evaluation {
    pub theme_set_id: String,
    pub credibility: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dependability: Option<DependabilityReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alignment: Option<AlignmentReport>,
}

fn load_theme_set(path: &Path) -> Result<ThemeSet, CliError> {
    serde_json::from_str(&read(path, Stage::Parse)?)
        .map_err(|e| CliError::stage(Stage::Parse, format!("{}: {e}", path.display())))
}

/// Scores a saved theme set: credibility against the transcripts,
/// dependability against other saved sets, alignment against human themes.
pub fn cmd_evaluate(
    themes: &Path,
    transcripts: &[PathBuf],
    against: &[PathBuf],
    human: Option<&Path>,
) -> Result<Evaluation, CliError> {
    let ts = load_theme_set(themes)?;
    let corpus = load_corpus(transcripts)?;
    let ids = corpus.quote_ids().collect();
    let c = credibility(&ts, &ids).map_err(|e| CliError::stage(Stage::Output, e))?;
    let dependability = if against.is_empty() {
        None
    } else {
        let mut runs = vec![ts.clone()];
        for p in against {
            runs.push(load_theme_set(p)?);
        }
        Some(dependability(&runs).map_err(|e| CliError::stage(Stage::Dependability, e))?)
    };
    let alignment = human.map(|h| alignment_for(h, &ts)).transpose()?;
    Ok(Evaluation {
        theme_set_id: ts.id,
        credibility: c,
        dependability,
        alignment,
    })
}

/// `runs` seed-varied iteration-0 generations compared pairwise.
pub fn cmd_dependability(cfg: &RunConfig, runs: usize) -> Result<DependabilityReport, CliError> {
    if runs < 2 {
        return Err(CliError::Usage(format!("dependability needs at least 2 runs, got {runs}")));
    }
    let corpus = load_corpus(&cfg.transcripts)?;
    let pipeline = build_pipeline(cfg)?;
    let sets: Vec<ThemeSet> = pipeline
        .dependability_runs(&corpus, runs)
        .map_err(|e| CliError::stage(e.stage, e.message))?
        .into_iter()
        .map(|g| g.theme_set)
        .collect();
    dependability(&sets).map_err(|e| CliError::stage(Stage::Dependability, e))
}

/// Every train/validation split of the transcripts in the corpus.
pub fn cmd_transferability(cfg: &RunConfig) -> Result<TransferabilityReport, CliError> {
    let corpus = load_corpus(&cfg.transcripts)?;
    if corpus.len() < 3 {
        return Err(CliError::stage(
            Stage::Transferability,
            format!("transferability needs at least 3 transcripts, found {}", corpus.len()),
        ));
    }
    let pipeline = build_pipeline(cfg)?;
    let units = transfer_units(&corpus, cfg.chunk_limit).map_err(|e| CliError::stage(e.stage, e.message))?;
    let splits = pipeline
        .splits(units.len(), None)
        .map_err(|e| CliError::stage(Stage::Transferability, e))?;
    let (report, _) = pipeline
        .transferability(&units, &splits, "T")
        .map_err(|e| CliError::stage(e.stage, e.message))?;
    for s in &report.splits {
        log::info!("split {} val {:?}: {:.4}", s.split.index, s.split.val, s.score);
    }
    Ok(report)
}

/// Appends one rating to a JSON-lines file.
pub fn cmd_rate(ratings: &Path, record: &RewardRecord) -> Result<(), CliError> {
    let out = |e: &dyn std::fmt::Display| CliError::stage(Stage::Output, format!("{}: {e}", ratings.display()));
    let line = serde_json::to_string(record).map_err(|e| out(&e))?;
    let mut f = OpenOptions::new().create(true).append(true).open(ratings).map_err(|e| out(&e))?;
    writeln!(f, "{line}").map_err(|e| out(&e))
}

pub fn parse_criterion(s: &str) -> Result<(Criterion, String), CliError> {
    let (name, note) = s.split_once('=').unwrap_or((s, ""));
    let c = match name.trim().to_ascii_lowercase().as_str() {
        "coverage" => Criterion::Coverage,
        "actionability" => Criterion::Actionability,
        "distinctiveness" => Criterion::Distinctiveness,
        "relevance" => Criterion::Relevance,
        other => return Err(CliError::Usage(format!("unknown criterion {other:?}"))),
    };
    Ok((c, note.trim().to_string()))
}

/// Trains on ratings; records without inline features are matched by theme
/// set id against the rounds recorded in the given audit trails.
pub fn cmd_train(ratings: &Path, audits: &[PathBuf], lr: f64, epochs: usize) -> Result<RewardModel, CliError> {
    let records = parse_reward_records(&read(ratings, Stage::Parse)?)
        .map_err(|e| CliError::stage(Stage::Parse, format!("{}: {e}", ratings.display())))?;
    let mut known: BTreeMap<String, (ThemeSet, ScoreVector)> = BTreeMap::new();
    for p in audits {
        let audit: AuditTrail = serde_json::from_str(&read(p, Stage::Parse)?)
            .map_err(|e| CliError::stage(Stage::Parse, format!("{}: {e}", p.display())))?;
        for r in audit.records {
            known.insert(r.theme_set.id.clone(), (r.theme_set, r.score));
        }
    }
    let data = records
        .iter()
        .map(|r| {
            let x = match r.features {
                Some(f) => f,
                None => {
                    let (ts, s) = known.get(&r.theme_set_id).ok_or_else(|| {
                        CliError::stage(Stage::Parse, format!("no audit trail records theme set {:?}", r.theme_set_id))
                    })?;
                    FeatureVector::from_theme_set(ts, s)
                }
            };
            Ok((x, f64::from(r.rating)))
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    train_reward_model(&data, lr, epochs).map_err(|e| CliError::stage(Stage::Refine, e))
}
