//! TOML configuration shared by every subcommand.
//!
//! A document is one TOML table. Each consumer deserializes only the
//! sections it owns, so the edge and cloud services can keep their own
//! sections in the same file. Any key can be overridden from the
//! environment: `SYNERGY_SIM__N_REQUESTS=50` sets `sim.n_requests`.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;
use toml::{Table, Value};

use crate::cost_model::{
    framework_cost, lora_summary, split_ratio_d, CostError, CostReport, DatumSize, DeploymentSpec,
    Framework, Links, LoraConfig, ModelShape,
};
use crate::latency_sim::SimParams;
use crate::protocol::WorkflowGraph;

pub const ENV_PREFIX: &str = "SYNERGY_";

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("config is not valid TOML: {0}")]
    Syntax(String),
    #[error("config key `{key}`: {reason}")]
    Key { key: String, reason: String },
}

impl ConfigError {
    pub fn key(key: impl Into<String>, reason: impl ToString) -> Self {
        ConfigError::Key {
            key: key.into(),
            reason: reason.to_string(),
        }
    }
}

impl From<CostError> for ConfigError {
    fn from(e: CostError) -> Self {
        ConfigError::key("models", e)
    }
}

pub fn parse_document(text: &str) -> Result<Table, ConfigError> {
    text.parse::<Table>()
        .map_err(|e| ConfigError::Syntax(e.message().to_string()))
}

pub fn read_document(path: &Path) -> Result<Table, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_document(&text)
}

fn parse_scalar(raw: &str) -> Value {
    match format!("v = {raw}").parse::<Table>() {
        Ok(mut t) => t.remove("v").expect("parsed key"),
        Err(_) => Value::String(raw.to_string()),
    }
}

/// Sets a dotted key, creating intermediate tables.
pub fn set_path(doc: &mut Table, dotted: &str, value: Value) -> Result<(), ConfigError> {
    let parts: Vec<&str> = dotted.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(ConfigError::key(dotted, "empty path segment"));
    }
    let (last, parents) = parts.split_last().expect("nonempty");
    let mut cur = doc;
    for (i, p) in parents.iter().enumerate() {
        let entry = cur
            .entry(p.to_string())
            .or_insert_with(|| Value::Table(Table::new()));
        cur = match entry {
            Value::Table(t) => t,
            _ => {
                return Err(ConfigError::key(
                    parts[..=i].join("."),
                    "is a value, not a section",
                ))
            }
        };
    }
    cur.insert(last.to_string(), value);
    Ok(())
}

/// Applies `SYNERGY_A__B=value` style overrides. Values are read as TOML
/// scalars, falling back to plain strings. Returns the dotted keys touched.
pub fn apply_env_overrides<I>(doc: &mut Table, vars: I) -> Result<Vec<String>, ConfigError>
where
    I: IntoIterator<Item = (String, String)>,
{
    let mut touched = Vec::new();
    let mut vars: Vec<(String, String)> = vars
        .into_iter()
        .filter(|(k, _)| k.starts_with(ENV_PREFIX))
        .collect();
    vars.sort();
    for (key, raw) in vars {
        let dotted = key[ENV_PREFIX.len()..].to_ascii_lowercase().replace("__", ".");
        set_path(doc, &dotted, parse_scalar(&raw))?;
        touched.push(dotted);
    }
    Ok(touched)
}

/// Deserializes one top-level section, reporting failures under its name.
pub fn section<T: DeserializeOwned>(doc: &Table, name: &str) -> Result<T, ConfigError> {
    let value = doc
        .get(name)
        .cloned()
        .ok_or_else(|| ConfigError::key(name, "missing section"))?;
    value
        .try_into()
        .map_err(|e: toml::de::Error| ConfigError::key(name, e.message()))
}

fn optional_section<T: DeserializeOwned + Default>(doc: &Table, name: &str) -> Result<T, ConfigError> {
    if doc.contains_key(name) {
        section(doc, name)
    } else {
        Ok(T::default())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorkloadSection {
    pub n_requests: u64,
    pub concise_bytes: u64,
    pub comprehensive_bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelsSection {
    pub cloud: ModelShape,
    pub edge: ModelShape,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitSection {
    pub fraction: f64,
    pub datum: DatumSize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynergySection {
    pub dedup_forward_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSection {
    pub n_requests: u64,
    pub cloud_infer_s_per_request: f64,
    pub edge_infer_s_per_request: f64,
    pub batch_window_s: f64,
    pub max_batch: u64,
    pub cloud_batch_speedup: f64,
    pub duplicate_fraction: f64,
    pub rng_seed: u64,
    #[serde(default)]
    pub arrival_jitter_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NetmgmtSection {
    pub interval_hours: f64,
    pub top_k: usize,
    pub split: f64,
    pub window_days: f64,
    pub timestamp_column: String,
    pub title_column: String,
    pub intent_seed: u64,
    pub intent_samples: usize,
}

impl Default for NetmgmtSection {
    fn default() -> Self {
        NetmgmtSection {
            interval_hours: 6.0,
            top_k: 20,
            split: 0.95,
            window_days: 182.5,
            timestamp_column: "timestamp".into(),
            title_column: "title".into(),
            intent_seed: 7,
            intent_samples: 4000,
        }
    }
}

/// The sections owned by the core crate.
#[derive(Debug, Clone, PartialEq)]
pub struct CoreConfig {
    pub workload: WorkloadSection,
    pub links: Links,
    pub models: ModelsSection,
    pub lora: LoraConfig,
    pub split: SplitSection,
    pub synergy: SynergySection,
    pub sim: SimSection,
    pub netmgmt: NetmgmtSection,
    pub workflow: WorkflowGraph,
}

impl CoreConfig {
    pub fn from_document(doc: &Table) -> Result<Self, ConfigError> {
        let cfg = CoreConfig {
            workload: section(doc, "workload")?,
            links: section(doc, "links")?,
            models: section(doc, "models")?,
            lora: section(doc, "lora")?,
            split: section(doc, "split")?,
            synergy: section(doc, "synergy")?,
            sim: section(doc, "sim")?,
            netmgmt: optional_section(doc, "netmgmt")?,
            workflow: if doc.contains_key("workflow") {
                section(doc, "workflow")?
            } else {
                WorkflowGraph::canonical()
            },
        };
        cfg.models
            .cloud
            .validate()
            .map_err(|e| ConfigError::key("models.cloud", e))?;
        cfg.models
            .edge
            .validate()
            .map_err(|e| ConfigError::key("models.edge", e))?;
        cfg.links
            .end_edge
            .validate("links.end_edge")
            .map_err(|e| ConfigError::key("links.end_edge", e))?;
        cfg.links
            .edge_cloud
            .validate("links.edge_cloud")
            .map_err(|e| ConfigError::key("links.edge_cloud", e))?;
        cfg.sim_params()?
            .validate()
            .map_err(|e| ConfigError::key("sim", e))?;
        Ok(cfg)
    }

    pub fn deployment_spec(&self, kind: Framework) -> DeploymentSpec {
        DeploymentSpec {
            kind,
            edge_model: match kind {
                Framework::CloudOnly => None,
                _ => Some(self.models.edge.clone()),
            },
            cloud_model: Some(self.models.cloud.clone()),
            split_fraction: self.split.fraction,
            dedup_forward_fraction: self.synergy.dedup_forward_fraction,
            concise_bytes: self.workload.concise_bytes as f64,
            comprehensive_bytes: self.workload.comprehensive_bytes as f64,
            split_datum: self.split.datum,
        }
    }

    pub fn split_ratio(&self) -> Result<f64, ConfigError> {
        split_ratio_d(
            self.models.cloud.hidden_dim,
            self.split.datum,
            self.workload.concise_bytes as f64,
        )
        .map_err(|e| ConfigError::key("split.datum", e))
    }

    /// Cost rows for `frameworks` over the configured workload.
    pub fn cost_report(&self, frameworks: &[Framework]) -> Result<CostReport, ConfigError> {
        let rows = frameworks
            .iter()
            .map(|&k| framework_cost(&self.deployment_spec(k), &self.links, self.workload.n_requests))
            .collect::<Result<Vec<_>, _>>()?;
        let lora = match self.models.cloud.applies_lora_to.is_empty() {
            true => None,
            false => Some(
                lora_summary(&self.models.cloud, &self.lora)
                    .map_err(|e| ConfigError::key("lora.rank", e))?,
            ),
        };
        Ok(CostReport {
            workload_n: self.workload.n_requests,
            rows,
            split_ratio: self.split_ratio()?,
            split_datum: self.split.datum,
            lora,
        })
    }

    pub fn sim_params(&self) -> Result<SimParams, ConfigError> {
        let payload = self
            .deployment_spec(Framework::Splitting)
            .split_payload_bytes()
            .map_err(|e| ConfigError::key("split", e))?;
        let s = &self.sim;
        Ok(SimParams {
            n_requests: s.n_requests,
            concise_bytes: self.workload.concise_bytes,
            comprehensive_bytes: self.workload.comprehensive_bytes,
            end_edge: self.links.end_edge,
            edge_cloud: self.links.edge_cloud,
            cloud_infer_s_per_request: s.cloud_infer_s_per_request,
            edge_infer_s_per_request: s.edge_infer_s_per_request,
            batch_window_s: s.batch_window_s,
            max_batch: s.max_batch,
            cloud_batch_speedup: s.cloud_batch_speedup,
            duplicate_fraction: s.duplicate_fraction,
            rng_seed: s.rng_seed,
            arrival_jitter_s: s.arrival_jitter_s,
            split_fraction: self.split.fraction,
            split_payload_bytes: payload.round() as u64,
        })
    }
}
