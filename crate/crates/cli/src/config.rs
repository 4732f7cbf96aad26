//! JSON config file for the `generate` and `run` subcommands.
//!
//! Every field is optional. Flags override the file, and the file overrides
//! built-in defaults. Relative paths are resolved against the directory of
//! the config file.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::Deserialize;
use sqlmorph_core::generate::GenerationConfig;

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AppConfig {
    pub schemas: Option<PathBuf>,
    pub examples: Option<PathBuf>,
    pub suite: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub strict: Option<bool>,
    pub generation: Option<GenerationConfig>,
    pub adapter: Option<String>,
    /// Seconds per prediction.
    pub timeout: Option<f64>,
    pub max_inflight: Option<usize>,
    /// `run` exits with status 3 when the share of model failures exceeds this.
    pub max_failure_rate: Option<f64>,
    pub report: Option<PathBuf>,
    pub records: Option<PathBuf>,
    pub format: Option<String>,
    pub value_sensitive: Option<bool>,
}

fn rebase(base: &Path, p: &mut Option<PathBuf>) {
    if let Some(path) = p {
        if path.is_relative() {
            *path = base.join(&*path);
        }
    }
}

impl AppConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let bytes = fs::read(path).with_context(|| format!("reading config {}", path.display()))?;
        let mut cfg: AppConfig =
            serde_json::from_slice(&bytes).with_context(|| format!("parsing config {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [
            &mut cfg.schemas,
            &mut cfg.examples,
            &mut cfg.suite,
            &mut cfg.out,
            &mut cfg.report,
            &mut cfg.records,
        ] {
            rebase(base, p);
        }
        if let Some(g) = &mut cfg.generation {
            for p in [
                &mut g.prefix_lexicon,
                &mut g.synonym_groups,
                &mut g.rename_lexicon,
                &mut g.attribute_kb,
            ] {
                rebase(base, p);
            }
        }
        Ok(cfg)
    }

    pub fn load_opt(path: Option<&Path>) -> anyhow::Result<Self> {
        path.map_or_else(|| Ok(AppConfig::default()), AppConfig::load)
    }
}
