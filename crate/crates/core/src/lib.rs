//! Automated thematic analysis of interview transcripts.
//!
//! Transcripts annotated with Quote IDs (`[P1_S002]`) are chunked, coded by
//! several role-conditioned agents, grouped into themes and refined by a
//! critic loop scored on credibility, dependability and transferability.
//! Alignment metrics compare the result against human-authored themes, and
//! a small reward model can rank candidate theme sets from human ratings.

pub mod agents;
pub mod corpus;
pub mod metrics;
pub mod model;
pub mod pipeline;
pub mod refine;
pub mod report;
pub mod reward;
pub mod seed;

pub use corpus::{parse_transcript, Chunk, Corpus, CorpusError, QuoteId, Transcript, Utterance};
pub use model::{
    apply_edit, AuditTrail, Code, EditKind, EditProposal, IterationRecord, ScoreVector, Theme, ThemeDraft, ThemeId,
    ThemeSet,
};
pub use pipeline::{Pipeline, PipelineConfig, PipelineError, RunOutput, Stage};
pub use refine::{RefineConfig, RefineMode};
pub use report::Report;
pub use reward::{RewardModel, RewardRecord};
