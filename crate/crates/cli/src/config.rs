//! Run configuration: a TOML (or JSON) file, overridden by flags.

use std::fs;
use std::path::{Path, PathBuf};

use autota::agents::{check_identities, parse_identities, BackendConfig, BackendKind, Identity, PromptSet};
use autota::corpus::{parse_transcript, Corpus, DEFAULT_CHUNK_LIMIT};
use autota::pipeline::{PipelineConfig, Stage};
use autota::refine::RefineConfig;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Transcript files, or directories whose `*.txt` files are read in
    /// name order.
    pub transcripts: Vec<PathBuf>,
    /// Coder identity names; defaults to the built-in four.
    pub identities: Option<Vec<String>>,
    /// Perspective for the theme agent (none by default).
    pub theme_identity: Option<String>,
    pub backend: BackendConfig,
    pub refine: RefineConfig,
    pub out: PathBuf,
    pub seed: u64,
    pub chunk_limit: usize,
    pub run_id: Option<String>,
    /// Directory with replacement prompt templates.
    pub prompts_dir: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            transcripts: Vec::new(),
            identities: None,
            theme_identity: None,
            backend: BackendConfig::default(),
            refine: RefineConfig::default(),
            out: PathBuf::from("autota-out"),
            seed: 0,
            chunk_limit: DEFAULT_CHUNK_LIMIT,
            run_id: None,
            prompts_dir: None,
        }
    }
}

/// Flag values that override the config file when present.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub transcripts: Vec<PathBuf>,
    pub backend: Option<BackendKind>,
    pub model: Option<String>,
    pub endpoint: Option<String>,
    pub seed: Option<u64>,
    pub max_iters: Option<u32>,
    pub chunk_limit: Option<usize>,
    pub identities: Option<String>,
    pub out: Option<PathBuf>,
}

fn config_err(msg: impl std::fmt::Display) -> CliError {
    CliError::stage(Stage::Config, msg)
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| config_err(format!("{}: {e}", path.display())))?;
        let is_json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
        let parsed = if is_json {
            serde_json::from_str(&text).map_err(|e| e.to_string())
        } else {
            toml::from_str(&text).map_err(|e| e.to_string())
        };
        let mut cfg: RunConfig = parsed.map_err(|e| config_err(format!("{}: {e}", path.display())))?;
        // Relative paths in a config file are relative to the file.
        if let Some(base) = path.parent() {
            for t in &mut cfg.transcripts {
                if t.is_relative() {
                    *t = base.join(&*t);
                }
            }
            if let Some(dir) = &mut cfg.prompts_dir {
                if dir.is_relative() {
                    *dir = base.join(&*dir);
                }
            }
        }
        Ok(cfg)
    }

    pub fn apply(&mut self, o: Overrides) {
        if !o.transcripts.is_empty() {
            self.transcripts = o.transcripts;
        }
        if let Some(b) = o.backend {
            self.backend.kind = b;
        }
        if let Some(m) = o.model {
            self.backend.model = m;
        }
        if o.endpoint.is_some() {
            self.backend.endpoint = o.endpoint;
        }
        if let Some(s) = o.seed {
            self.seed = s;
        }
        if let Some(m) = o.max_iters {
            self.refine.max_iterations = m;
        }
        if let Some(c) = o.chunk_limit {
            self.chunk_limit = c;
        }
        if let Some(ids) = o.identities {
            self.identities = Some(ids.split(',').map(|s| s.trim().to_string()).collect());
        }
        if let Some(out) = o.out {
            self.out = out;
        }
    }

    pub fn identities(&self) -> Result<Vec<Identity>, CliError> {
        let ids = match &self.identities {
            Some(names) => parse_identities(&names.join(",")).map_err(config_err)?,
            None => autota::agents::default_identities(),
        };
        check_identities(&ids).map_err(config_err)?;
        Ok(ids)
    }

    pub fn run_id(&self) -> String {
        self.run_id.clone().unwrap_or_else(|| format!("run-{}", self.seed))
    }

    pub fn prompts(&self) -> Result<PromptSet, CliError> {
        match &self.prompts_dir {
            Some(dir) => PromptSet::from_dir(dir).map_err(|e| config_err(format!("{}: {e}", dir.display()))),
            None => Ok(PromptSet::default()),
        }
    }

    pub fn pipeline_config(&self) -> Result<PipelineConfig, CliError> {
        if self.chunk_limit == 0 {
            return Err(config_err("chunk_limit must be positive"));
        }
        self.refine.validate().map_err(config_err)?;
        Ok(PipelineConfig {
            run_id: self.run_id(),
            seed: self.seed,
            identities: self.identities()?,
            theme_identity: self.theme_identity.as_deref().map(Identity::new),
            chunk_limit: self.chunk_limit,
            refine: self.refine.clone(),
        })
    }
}

/// Expands directories to their `*.txt` files, sorted by name.
pub fn expand_paths(paths: &[PathBuf]) -> Result<Vec<PathBuf>, CliError> {
    let mut out = Vec::new();
    for p in paths {
        if p.is_dir() {
            let mut files: Vec<PathBuf> = fs::read_dir(p)
                .map_err(|e| CliError::stage(Stage::Parse, format!("{}: {e}", p.display())))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|f| f.is_file() && f.extension().is_some_and(|x| x == "txt"))
                .collect();
            files.sort();
            out.extend(files);
        } else if p.is_file() {
            out.push(p.clone());
        } else {
            return Err(CliError::stage(
                Stage::Parse,
                format!("transcript path does not exist: {}", p.display()),
            ));
        }
    }
    Ok(out)
}

/// Reads and parses transcripts; each transcript id is its file stem.
pub fn load_corpus(paths: &[PathBuf]) -> Result<Corpus, CliError> {
    let files = expand_paths(paths)?;
    if files.is_empty() {
        return Err(CliError::stage(Stage::Parse, "no transcripts given"));
    }
    let transcripts = files
        .iter()
        .map(|f| {
            let text = fs::read_to_string(f).map_err(|e| CliError::stage(Stage::Parse, format!("{}: {e}", f.display())))?;
            let id = f.file_stem().map_or_else(|| f.display().to_string(), |s| s.to_string_lossy().into_owned());
            parse_transcript(&text, &id).map_err(|e| CliError::stage(Stage::Parse, format!("{}: {e}", f.display())))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Corpus::new(transcripts).map_err(|e| CliError::stage(Stage::Parse, e))
}
