//! Command-line front end: argument parsing, config loading, output files.

pub mod commands;
pub mod config;

use std::fmt;
use std::path::PathBuf;

use autota::agents::BackendKind;
use autota::metrics::{AlignmentReport, DependabilityReport, TransferabilityReport};
use autota::pipeline::Stage;
use autota::report::{Report, Stat};
use autota::reward::RewardRecord;
use clap::{Args, Parser, Subcommand};
use thiserror::Error;

pub use commands::{
    cmd_compare, cmd_dependability, cmd_evaluate, cmd_rate, cmd_run, cmd_train, cmd_transferability, RunOptions,
    RunSummary,
};
pub use config::{load_corpus, Overrides, RunConfig};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{stage} stage failed: {message}")]
    Stage { stage: Stage, message: String },
    #[error("usage: {0}")]
    Usage(String),
}

impl CliError {
    pub fn stage(stage: Stage, message: impl fmt::Display) -> Self {
        CliError::Stage {
            stage,
            message: message.to_string(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Stage { .. } => 1,
            CliError::Usage(_) => 2,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "autota", version, about = "Multi-agent thematic analysis of interview transcripts")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

/// Flags shared by every command that generates themes.
#[derive(Debug, Clone, Args, Default)]
pub struct CommonArgs {
    /// TOML or JSON run configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub backend: Option<BackendKind>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long = "max-iters")]
    pub max_iters: Option<u32>,
    #[arg(long = "chunk-limit")]
    pub chunk_limit: Option<usize>,
    /// Comma-separated coder identities.
    #[arg(long)]
    pub identities: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Chat-completions URL for the remote backend.
    #[arg(long)]
    pub endpoint: Option<String>,
    #[arg(long)]
    pub model: Option<String>,
}

impl CommonArgs {
    /// The config file (if any) with flags applied on top.
    pub fn resolve(&self, transcripts: Vec<PathBuf>) -> Result<RunConfig, CliError> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        cfg.apply(Overrides {
            transcripts,
            backend: self.backend,
            model: self.model.clone(),
            endpoint: self.endpoint.clone(),
            seed: self.seed,
            max_iters: self.max_iters,
            chunk_limit: self.chunk_limit,
            identities: self.identities.clone(),
            out: self.out.clone(),
        });
        if cfg.transcripts.is_empty() {
            return Err(CliError::Usage("no transcripts given".into()));
        }
        Ok(cfg)
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Code, theme and refine a corpus; writes themes, audit trail and report.
    Run {
        /// Transcript files or directories.
        transcripts: Vec<PathBuf>,
        #[command(flatten)]
        common: CommonArgs,
        /// Trained reward model (JSON) for reward-guided refinement and --best-of.
        #[arg(long = "reward-model")]
        reward_model: Option<PathBuf>,
        /// Generate this many candidates and keep the highest-reward one.
        #[arg(long = "best-of", default_value_t = 1)]
        best_of: usize,
        /// Human theme list to align the final themes against.
        #[arg(long)]
        human: Option<PathBuf>,
    },
    /// Score a saved theme set.
    Evaluate {
        themes: PathBuf,
        #[arg(long, required = true, num_args = 1..)]
        transcripts: Vec<PathBuf>,
        /// Other saved theme sets to compute dependability against.
        #[arg(long, num_args = 1..)]
        against: Vec<PathBuf>,
        #[arg(long)]
        human: Option<PathBuf>,
    },
    /// Align generated themes with human themes.
    Compare { llm: PathBuf, human: PathBuf },
    /// Pairwise agreement across seed-varied generations.
    Dependability {
        transcripts: Vec<PathBuf>,
        #[arg(long, default_value_t = 10)]
        runs: usize,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Train/validation agreement over every split of a corpus directory.
    Transferability {
        corpus: PathBuf,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Append a binary rating of a theme set.
    Rate {
        /// JSON-lines ratings file.
        ratings: PathBuf,
        #[arg(long = "theme-set")]
        theme_set: String,
        #[arg(long)]
        rating: u8,
        #[arg(long, default_value = "")]
        rater: String,
        /// `criterion=note`, repeatable.
        #[arg(long = "note")]
        notes: Vec<String>,
    },
    /// Fit a reward model to ratings.
    Train {
        ratings: PathBuf,
        /// Audit trails holding the rated theme sets.
        #[arg(long = "audit", num_args = 1..)]
        audits: Vec<PathBuf>,
        #[arg(long, default_value_t = 0.05)]
        lr: f64,
        #[arg(long, default_value_t = 1000)]
        epochs: usize,
        #[arg(long)]
        out: PathBuf,
    },
}

fn stat_line(name: &str, s: Option<&Stat>) -> String {
    match s {
        Some(s) => format!("{name:<16}{:>10.4} ± {:.4} (n={})", s.mean, s.std, s.n),
        None => format!("{name:<16}{:>10}", "n/a"),
    }
}

/// The human-readable summary printed after `run`.
pub fn format_report(r: &Report) -> String {
    let mut out = String::new();
    out.push_str(&format!("run {} (seed {}, {})\n", r.run_id, r.seed, r.backend));
    out.push_str("iter  themes  credibility  dependability  transferability  edits\n");
    for it in &r.iterations {
        out.push_str(&format!(
            "{:>4}  {:>6}  {:>11.4}  {:>13.4}  {:>15.4}  {:>5}\n",
            it.iteration, it.themes, it.credibility, it.dependability, it.transferability, it.applied_edits
        ));
    }
    out.push_str(&format!("{:<16}{:>10.4}\n", "credibility", r.credibility));
    out.push_str(&stat_line("dependability", r.dependability.as_ref()));
    out.push('\n');
    out.push_str(&stat_line("transferability", r.transferability.as_ref()));
    out.push('\n');
    if let Some(a) = &r.alignment {
        out.push_str(&format_alignment(a));
    }
    out.push_str(&format!("converged: {}\n", r.converged));
    out
}

pub fn format_alignment(a: &AlignmentReport) -> String {
    let mut out = format!(
        "cosine_bi {:.4}  levenshtein_DL {:.4}  bleu_B {:.4}\n",
        a.cosine_bi, a.levenshtein_dl, a.bleu_b
    );
    for m in &a.matches {
        out.push_str(&format!("- {}\n", m.human));
        for b in &m.best {
            out.push_str(&format!(
                "    {:.4} {:.4} {:.4}  {}\n",
                b.cosine, b.levenshtein, b.bleu, b.llm
            ));
        }
    }
    out
}

fn mean_std(name: &str, mean: f64, std: f64, n: usize) -> String {
    format!("{name}: {mean:.4} ± {std:.4} (n={n})\n")
}

fn dependability_text(r: &DependabilityReport) -> String {
    mean_std("dependability", r.mean, r.std, r.pairs.len())
}

fn transferability_text(r: &TransferabilityReport) -> String {
    mean_std("transferability", r.mean, r.std, r.splits.len())
}

/// Runs one command and returns what to print on stdout.
pub fn execute(cli: Cli) -> Result<String, CliError> {
    match cli.command {
        Command::Run {
            transcripts,
            common,
            reward_model,
            best_of,
            human,
        } => {
            let cfg = common.resolve(transcripts)?;
            let opts = RunOptions {
                reward_model,
                best_of,
                human_themes: human,
            };
            let summary = cmd_run(&cfg, &opts)?;
            Ok(format_report(&summary.report))
        }
        Command::Evaluate {
            themes,
            transcripts,
            against,
            human,
        } => {
            let e = cmd_evaluate(&themes, &transcripts, &against, human.as_deref())?;
            let mut out = format!("{}\ncredibility: {:.4}\n", e.theme_set_id, e.credibility);
            if let Some(d) = &e.dependability {
                out.push_str(&dependability_text(d));
            }
            if let Some(a) = &e.alignment {
                out.push_str(&format_alignment(a));
            }
            Ok(out)
        }
        Command::Compare { llm, human } => Ok(format_alignment(&cmd_compare(&llm, &human)?)),
        Command::Dependability {
            transcripts,
            runs,
            common,
        } => {
            let cfg = common.resolve(transcripts)?;
            Ok(dependability_text(&cmd_dependability(&cfg, runs)?))
        }
        Command::Transferability { corpus, common } => {
            let cfg = common.resolve(vec![corpus])?;
            Ok(transferability_text(&cmd_transferability(&cfg)?))
        }
        Command::Rate {
            ratings,
            theme_set,
            rating,
            rater,
            notes,
        } => {
            if rating > 1 {
                return Err(CliError::Usage(format!("rating must be 0 or 1, got {rating}")));
            }
            let criteria_notes = notes
                .iter()
                .map(|n| commands::parse_criterion(n))
                .collect::<Result<_, _>>()?;
            let record = RewardRecord {
                theme_set_id: theme_set,
                rating,
                criteria_notes,
                rater_id: rater,
                timestamp: None,
                features: None,
            };
            cmd_rate(&ratings, &record)?;
            Ok(format!("recorded rating for {}\n", record.theme_set_id))
        }
        Command::Train {
            ratings,
            audits,
            lr,
            epochs,
            out,
        } => {
            let model = cmd_train(&ratings, &audits, lr, epochs)?;
            commands::write_json(&out, &model)?;
            Ok(match &model.metadata {
                Some(m) => format!("trained on {} records, final loss {:.4}\n", m.records, m.final_loss),
                None => "trained\n".to_string(),
            })
        }
    }
}
