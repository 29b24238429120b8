//! Merged view of every config section the commands use.

use std::path::{Path, PathBuf};

use serde::Deserialize;
use synergy_core::config::{apply_env_overrides, parse_document, read_document, section, ConfigError, CoreConfig};
use synergy_core::protocol::validate_workflow;
use synergy_serve::backend::{BackendSection, GenerationSettings};
use synergy_serve::cloud::CloudSettings;
use synergy_serve::edge::EdgeSettings;

use crate::error::CliError;

/// Used when `--config` is not given.
pub const BUILT_IN: &str = include_str!("../../../defaults.paper.conf");

const SECTIONS: [&str; 14] = [
    "workload", "links", "models", "lora", "split", "synergy", "sim", "netmgmt", "workflow", "edge", "cloud",
    "generation", "backend", "output",
];

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub core: CoreConfig,
    pub edge: EdgeSettings,
    pub cloud: CloudSettings,
    pub backend: BackendSection,
    pub generation: GenerationSettings,
    pub output: OutputSection,
    /// Relative paths in the config resolve against this directory.
    pub base_dir: PathBuf,
    /// Dotted keys changed by environment overrides.
    pub overridden: Vec<String>,
}

impl RunConfig {
    /// Reads `path` (or the built-in defaults), applies `SYNERGY_*`
    /// overrides from `env` and checks every section.
    pub fn load<I>(path: Option<&Path>, env: I) -> Result<Self, CliError>
    where
        I: IntoIterator<Item = (String, String)>,
    {
        let (mut doc, base_dir) = match path {
            Some(p) => (
                read_document(p)?,
                p.parent()
                    .filter(|d| !d.as_os_str().is_empty())
                    .map(Path::to_path_buf)
                    .unwrap_or_else(|| PathBuf::from(".")),
            ),
            None => (parse_document(BUILT_IN)?, PathBuf::from(".")),
        };
        let overridden = apply_env_overrides(&mut doc, env)?;
        for key in doc.keys() {
            if !SECTIONS.contains(&key.as_str()) {
                return Err(ConfigError::key(key.as_str(), "unknown section").into());
            }
        }
        let core = CoreConfig::from_document(&doc)?;
        if let Err(violations) = validate_workflow(&core.workflow) {
            let list: Vec<String> = violations.iter().map(|v| v.to_string()).collect();
            return Err(ConfigError::key("workflow", list.join("; ")).into());
        }
        let edge: EdgeSettings = section(&doc, "edge")?;
        edge.validate().map_err(|e| ConfigError::key("edge", e))?;
        let generation: GenerationSettings = section(&doc, "generation")?;
        if generation.max_new_tokens == 0 {
            return Err(ConfigError::key("generation.max_new_tokens", "must be >= 1").into());
        }
        if !(generation.temperature >= 0.0 && generation.temperature.is_finite()) {
            return Err(ConfigError::key("generation.temperature", "must be >= 0").into());
        }
        Ok(RunConfig {
            core,
            edge,
            cloud: section(&doc, "cloud")?,
            backend: section(&doc, "backend")?,
            generation,
            output: section(&doc, "output")?,
            base_dir,
            overridden,
        })
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }
}
