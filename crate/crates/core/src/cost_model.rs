//! Analytical resource and transmission-latency model for the four
//! cloud-edge deployment frameworks.
//!
//! Everything here is a pure function of its inputs. Byte counts are carried
//! as `f64` because per-request averages (e.g. a fraction of comprehensive
//! prompts forwarded after de-duplication) are not integral.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Decimal gigabyte, used for every rendered storage/VRAM figure.
pub const GB: f64 = 1e9;
/// Decimal megabyte.
pub const MB: f64 = 1e6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CostError {
    #[error("LoRA rank {rank} violates rank < min(d_in, d_out)/4 for adapted matrix {d_in}x{d_out}")]
    RankTooLarge { rank: u64, d_in: u64, d_out: u64 },
    #[error("LoRA rank must be at least 1")]
    ZeroRank,
    #[error("invalid model shape `{model}`: {reason}")]
    InvalidShape { model: String, reason: String },
    #[error("{framework} deployment is missing required field `{field}`")]
    MissingField { framework: Framework, field: &'static str },
    #[error("{framework} deployment must not set field `{field}`")]
    UnexpectedField { framework: Framework, field: &'static str },
    #[error("`{field}` = {value} is out of range ({expected})")]
    OutOfRange {
        field: &'static str,
        value: f64,
        expected: &'static str,
    },
    #[error("unknown framework `{0}` (expected cloud-only, offload, splitting or synergy)")]
    UnknownFramework(String),
}

/// The four ways of placing LLM work across edge and cloud.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Framework {
    CloudOnly,
    Offload,
    Splitting,
    Synergy,
}

impl Framework {
    /// Report order: cloud-only, offload, splitting, synergy.
    pub const ALL: [Framework; 4] = [
        Framework::CloudOnly,
        Framework::Offload,
        Framework::Splitting,
        Framework::Synergy,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Framework::CloudOnly => "cloud-only",
            Framework::Offload => "offload",
            Framework::Splitting => "splitting",
            Framework::Synergy => "synergy",
        }
    }
}

impl fmt::Display for Framework {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Framework {
    type Err = CostError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "cloud-only" | "cloudonly" => Ok(Framework::CloudOnly),
            "offload" => Ok(Framework::Offload),
            "splitting" | "split" => Ok(Framework::Splitting),
            "synergy" => Ok(Framework::Synergy),
            _ => Err(CostError::UnknownFramework(s.to_string())),
        }
    }
}

/// One family of weight matrices that receives a LoRA bypass.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdaptedMatrix {
    #[serde(default)]
    pub name: String,
    pub d_in: u64,
    pub d_out: u64,
    pub instances_per_layer: u64,
}

/// Multipliers over raw weight bytes that yield VRAM estimates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VramFactors {
    pub inference: f64,
    pub full_finetune: f64,
    pub lora_finetune: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FinetuneMethod {
    Full,
    Lora,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelShape {
    pub name: String,
    pub total_params: u64,
    pub num_layers: u64,
    pub hidden_dim: u64,
    pub bytes_per_param: u8,
    #[serde(default)]
    pub applies_lora_to: Vec<AdaptedMatrix>,
    pub vram: VramFactors,
    pub finetune: FinetuneMethod,
}

impl ModelShape {
    pub fn validate(&self) -> Result<(), CostError> {
        let bad = |reason: &str| {
            Err(CostError::InvalidShape {
                model: self.name.clone(),
                reason: reason.to_string(),
            })
        };
        if self.total_params == 0 {
            return bad("total_params must be > 0");
        }
        if self.num_layers == 0 {
            return bad("num_layers must be > 0");
        }
        if self.hidden_dim == 0 {
            return bad("hidden_dim must be > 0");
        }
        if ![1, 2, 4, 8].contains(&self.bytes_per_param) {
            return bad("bytes_per_param must be one of 1, 2, 4, 8");
        }
        let v = self.vram;
        for f in [v.inference, v.full_finetune, v.lora_finetune] {
            if !f.is_finite() || f < 0.0 {
                return bad("VRAM factors must be finite and >= 0");
            }
        }
        if self
            .applies_lora_to
            .iter()
            .any(|m| m.d_in == 0 || m.d_out == 0)
        {
            return bad("adapted matrix dimensions must be > 0");
        }
        Ok(())
    }

    /// Raw weight storage in bytes.
    pub fn weight_bytes(&self) -> f64 {
        self.total_params as f64 * f64::from(self.bytes_per_param)
    }

    pub fn inference_vram(&self) -> f64 {
        self.weight_bytes() * self.vram.inference
    }

    pub fn full_finetune_vram(&self) -> f64 {
        self.weight_bytes() * self.vram.full_finetune
    }

    pub fn lora_finetune_vram(&self) -> f64 {
        self.weight_bytes() * self.vram.lora_finetune
    }

    /// Fine-tuning VRAM under the model's configured method.
    pub fn finetune_vram(&self) -> f64 {
        match self.finetune {
            FinetuneMethod::Full => self.full_finetune_vram(),
            FinetuneMethod::Lora => self.lora_finetune_vram(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoraConfig {
    pub rank: u64,
    pub scale_factor: f64,
    /// Storage width of adapter weights.
    #[serde(default = "default_adapter_bytes")]
    pub adapter_bytes_per_param: u8,
}

fn default_adapter_bytes() -> u8 {
    4
}

impl LoraConfig {
    pub fn new(rank: u64, scale_factor: f64) -> Self {
        LoraConfig {
            rank,
            scale_factor,
            adapter_bytes_per_param: default_adapter_bytes(),
        }
    }
}

/// Number of trainable parameters added by LoRA bypasses.
///
/// Each adapted `d_in x d_out` matrix gains `A: d_in x r` and `B: r x d_out`,
/// i.e. `r * (d_in + d_out)` parameters per instance.
pub fn lora_adapter_params(shape: &ModelShape, cfg: &LoraConfig) -> Result<u64, CostError> {
    if cfg.rank == 0 {
        return Err(CostError::ZeroRank);
    }
    let mut total = 0u64;
    for m in &shape.applies_lora_to {
        // rank << min(d_in, d_out), enforced as rank < min/4
        if cfg.rank.saturating_mul(4) >= m.d_in.min(m.d_out) {
            return Err(CostError::RankTooLarge {
                rank: cfg.rank,
                d_in: m.d_in,
                d_out: m.d_out,
            });
        }
        total += shape.num_layers * m.instances_per_layer * cfg.rank * (m.d_in + m.d_out);
    }
    Ok(total)
}

/// Adapter storage in bytes at `cfg.adapter_bytes_per_param`.
pub fn lora_adapter_bytes(shape: &ModelShape, cfg: &LoraConfig) -> Result<f64, CostError> {
    Ok(lora_adapter_params(shape, cfg)? as f64 * f64::from(cfg.adapter_bytes_per_param))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DatumUnit {
    Bits,
    Bytes,
}

impl fmt::Display for DatumUnit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DatumUnit::Bits => "bits",
            DatumUnit::Bytes => "bytes",
        })
    }
}

/// Size of one activation element, with its unit stated explicitly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatumSize {
    pub value: u64,
    pub unit: DatumUnit,
}

/// Intermediate-layer data volume relative to the input size under model
/// splitting: `hidden_dim * datum / avg_input_bytes`.
///
/// The datum is taken numerically in the unit it is given in; callers choose
/// the convention. 32 bits over 12-byte inputs gives 10,922.67 for a
/// 4096-wide hidden layer, 4 bytes gives 1,365.33.
pub fn split_ratio_d(
    hidden_dim: u64,
    datum: DatumSize,
    avg_input_bytes: f64,
) -> Result<f64, CostError> {
    if hidden_dim == 0 {
        return Err(CostError::OutOfRange {
            field: "hidden_dim",
            value: 0.0,
            expected: "> 0",
        });
    }
    if datum.value == 0 {
        return Err(CostError::OutOfRange {
            field: "datum_size",
            value: 0.0,
            expected: "> 0",
        });
    }
    if !(avg_input_bytes > 0.0 && avg_input_bytes.is_finite()) {
        return Err(CostError::OutOfRange {
            field: "avg_input_bytes",
            value: avg_input_bytes,
            expected: "> 0",
        });
    }
    Ok(hidden_dim as f64 * datum.value as f64 / avg_input_bytes)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkSpec {
    pub rate_bits_per_s: f64,
    #[serde(default)]
    pub per_request_handshake_s: f64,
}

impl LinkSpec {
    pub fn validate(&self, field: &'static str) -> Result<(), CostError> {
        if !(self.rate_bits_per_s > 0.0 && self.rate_bits_per_s.is_finite()) {
            return Err(CostError::OutOfRange {
                field,
                value: self.rate_bits_per_s,
                expected: "rate_bits_per_s > 0",
            });
        }
        if !(self.per_request_handshake_s >= 0.0 && self.per_request_handshake_s.is_finite()) {
            return Err(CostError::OutOfRange {
                field,
                value: self.per_request_handshake_s,
                expected: "per_request_handshake_s >= 0",
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Links {
    pub end_edge: LinkSpec,
    pub edge_cloud: LinkSpec,
}

/// Time to push `n_requests` payloads over `link`.
///
/// With `shared_connection` a single handshake is paid for the whole
/// workload, otherwise one per request.
pub fn transmission_latency(
    n_requests: u64,
    payload_bytes: f64,
    link: &LinkSpec,
    shared_connection: bool,
) -> f64 {
    if n_requests == 0 {
        return 0.0;
    }
    let n = n_requests as f64;
    let serialization = n * payload_bytes * 8.0 / link.rate_bits_per_s;
    let handshakes = if shared_connection { 1.0 } else { n };
    serialization + link.per_request_handshake_s * handshakes
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeploymentSpec {
    pub kind: Framework,
    pub edge_model: Option<ModelShape>,
    pub cloud_model: Option<ModelShape>,
    /// Fraction of layers hosted at the edge (splitting only).
    pub split_fraction: f64,
    /// Fraction of comprehensive prompts that survive edge de-duplication
    /// and reach the cloud (synergy only).
    pub dedup_forward_fraction: f64,
    pub concise_bytes: f64,
    pub comprehensive_bytes: f64,
    /// Activation element size used for the splitting payload.
    pub split_datum: DatumSize,
}

impl DeploymentSpec {
    pub fn validate(&self) -> Result<(), CostError> {
        let kind = self.kind;
        let missing = |field| Err(CostError::MissingField { framework: kind, field });
        if let Some(m) = &self.edge_model {
            m.validate()?;
        }
        if let Some(m) = &self.cloud_model {
            m.validate()?;
        }
        if !(self.concise_bytes >= 0.0 && self.concise_bytes.is_finite()) {
            return Err(CostError::OutOfRange {
                field: "concise_bytes",
                value: self.concise_bytes,
                expected: ">= 0",
            });
        }
        if !(self.comprehensive_bytes >= 0.0 && self.comprehensive_bytes.is_finite()) {
            return Err(CostError::OutOfRange {
                field: "comprehensive_bytes",
                value: self.comprehensive_bytes,
                expected: ">= 0",
            });
        }
        if self.cloud_model.is_none() {
            return missing("cloud_model");
        }
        match kind {
            Framework::CloudOnly => {
                if self.edge_model.is_some() {
                    return Err(CostError::UnexpectedField {
                        framework: kind,
                        field: "edge_model",
                    });
                }
            }
            Framework::Offload => {}
            Framework::Splitting => {
                if !(self.split_fraction > 0.0 && self.split_fraction < 1.0) {
                    return Err(CostError::OutOfRange {
                        field: "split_fraction",
                        value: self.split_fraction,
                        expected: "0 < split_fraction < 1",
                    });
                }
                if self.concise_bytes <= 0.0 {
                    return Err(CostError::OutOfRange {
                        field: "concise_bytes",
                        value: self.concise_bytes,
                        expected: "> 0 for splitting",
                    });
                }
            }
            Framework::Synergy => {
                if self.edge_model.is_none() {
                    return missing("edge_model");
                }
                if !(0.0..=1.0).contains(&self.dedup_forward_fraction) {
                    return Err(CostError::OutOfRange {
                        field: "dedup_forward_fraction",
                        value: self.dedup_forward_fraction,
                        expected: "0 <= dedup_forward_fraction <= 1",
                    });
                }
            }
        }
        Ok(())
    }

    fn cloud(&self) -> &ModelShape {
        self.cloud_model.as_ref().expect("validated")
    }

    /// Intermediate payload per request for splitting: `D * avg_input_bytes`.
    pub fn split_payload_bytes(&self) -> Result<f64, CostError> {
        let d = split_ratio_d(self.cloud().hidden_dim, self.split_datum, self.concise_bytes)?;
        Ok(d * self.concise_bytes)
    }
}

/// One framework's row in the cost comparison.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CostRow {
    pub framework: Framework,
    pub edge_storage_bytes: f64,
    pub edge_finetune_vram_bytes: f64,
    pub edge_inference_vram_bytes: f64,
    pub transmission_latency_s: f64,
    pub end_edge_bytes_per_request: f64,
    pub edge_cloud_bytes_per_request: f64,
    pub bytes_transferred_per_request: f64,
}

impl CostRow {
    pub fn fields(&self) -> [(&'static str, f64); 7] {
        [
            ("edge_storage_bytes", self.edge_storage_bytes),
            ("edge_finetune_vram_bytes", self.edge_finetune_vram_bytes),
            ("edge_inference_vram_bytes", self.edge_inference_vram_bytes),
            ("transmission_latency_s", self.transmission_latency_s),
            ("end_edge_bytes_per_request", self.end_edge_bytes_per_request),
            ("edge_cloud_bytes_per_request", self.edge_cloud_bytes_per_request),
            ("bytes_transferred_per_request", self.bytes_transferred_per_request),
        ]
    }

    /// Total bytes for a workload of `n` requests.
    pub fn total_bytes(&self, n: u64) -> f64 {
        self.bytes_transferred_per_request * n as f64
    }
}

/// Storage, VRAM and transmission figures for one deployment over a
/// workload of `workload_n` requests.
pub fn framework_cost(
    spec: &DeploymentSpec,
    links: &Links,
    workload_n: u64,
) -> Result<CostRow, CostError> {
    spec.validate()?;
    links.end_edge.validate("links.end_edge")?;
    links.edge_cloud.validate("links.edge_cloud")?;
    let cloud = spec.cloud();
    let concise = spec.concise_bytes;

    let (storage, finetune, inference) = match spec.kind {
        Framework::CloudOnly => (0.0, 0.0, 0.0),
        Framework::Offload => (
            cloud.weight_bytes(),
            cloud.finetune_vram(),
            cloud.inference_vram(),
        ),
        Framework::Splitting => {
            let f = spec.split_fraction;
            (
                f * cloud.weight_bytes(),
                f * cloud.finetune_vram(),
                f * cloud.inference_vram(),
            )
        }
        Framework::Synergy => {
            let edge = spec.edge_model.as_ref().expect("validated");
            (edge.weight_bytes(), edge.finetune_vram(), edge.inference_vram())
        }
    };

    let (end_edge, edge_cloud, latency) = match spec.kind {
        // One independent connection per request, straight to the cloud.
        Framework::CloudOnly => (
            0.0,
            concise,
            transmission_latency(workload_n, concise, &links.edge_cloud, false),
        ),
        Framework::Offload => (
            concise,
            0.0,
            transmission_latency(workload_n, concise, &links.end_edge, true),
        ),
        Framework::Splitting => {
            let payload = spec.split_payload_bytes()?;
            (
                concise,
                payload,
                transmission_latency(workload_n, concise, &links.end_edge, true)
                    + transmission_latency(workload_n, payload, &links.edge_cloud, true),
            )
        }
        Framework::Synergy => {
            let forwarded = spec.comprehensive_bytes * spec.dedup_forward_fraction;
            (
                concise,
                forwarded,
                transmission_latency(workload_n, concise, &links.end_edge, true)
                    + transmission_latency(workload_n, forwarded, &links.edge_cloud, true),
            )
        }
    };

    Ok(CostRow {
        framework: spec.kind,
        edge_storage_bytes: storage,
        edge_finetune_vram_bytes: finetune,
        edge_inference_vram_bytes: inference,
        transmission_latency_s: latency,
        end_edge_bytes_per_request: end_edge,
        edge_cloud_bytes_per_request: edge_cloud,
        bytes_transferred_per_request: end_edge + edge_cloud,
    })
}

/// LoRA-versus-full fine-tuning figures for the cloud model.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LoraSummary {
    pub model: String,
    pub rank: u64,
    pub scale_factor: f64,
    pub adapter_params: u64,
    pub adapter_storage_bytes: f64,
    pub full_finetune_storage_bytes: f64,
    pub full_finetune_vram_bytes: f64,
    pub lora_finetune_vram_bytes: f64,
}

pub fn lora_summary(shape: &ModelShape, cfg: &LoraConfig) -> Result<LoraSummary, CostError> {
    shape.validate()?;
    let params = lora_adapter_params(shape, cfg)?;
    Ok(LoraSummary {
        model: shape.name.clone(),
        rank: cfg.rank,
        scale_factor: cfg.scale_factor,
        adapter_params: params,
        adapter_storage_bytes: params as f64 * f64::from(cfg.adapter_bytes_per_param),
        full_finetune_storage_bytes: shape.weight_bytes(),
        full_finetune_vram_bytes: shape.full_finetune_vram(),
        lora_finetune_vram_bytes: shape.lora_finetune_vram(),
    })
}

/// The full comparison table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CostReport {
    pub workload_n: u64,
    pub rows: Vec<CostRow>,
    pub split_ratio: f64,
    pub split_datum: DatumSize,
    pub lora: Option<LoraSummary>,
}

/// `12345.678` -> `12,345` (truncated integer part with separators).
pub fn group_thousands(value: f64) -> String {
    let int = value.trunc() as i128;
    let digits = int.unsigned_abs().to_string();
    let mut out = String::new();
    for (i, c) in digits.chars().enumerate() {
        if i > 0 && (digits.len() - i).is_multiple_of(3) {
            out.push(',');
        }
        out.push(c);
    }
    if int < 0 {
        out.insert(0, '-');
    }
    out
}

impl CostReport {
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "cloud-edge framework comparison ({} requests)\n\n",
            self.workload_n
        ));
        out.push_str(&format!(
            "{:<12} {:>14} {:>16} {:>17} {:>16} {:>13}\n",
            "framework",
            "storage (GB)",
            "finetune (GB)",
            "inference (GB)",
            "tx latency (ms)",
            "bytes/req"
        ));
        for r in &self.rows {
            out.push_str(&format!(
                "{:<12} {:>14.2} {:>16.2} {:>17.2} {:>16.2} {:>13.2}\n",
                r.framework.as_str(),
                r.edge_storage_bytes / GB,
                r.edge_finetune_vram_bytes / GB,
                r.edge_inference_vram_bytes / GB,
                r.transmission_latency_s * 1e3,
                r.bytes_transferred_per_request,
            ));
        }
        out.push('\n');
        out.push_str(&format!(
            "split ratio D ({} {} datum): ≈{} ({:.2})\n",
            self.split_datum.value,
            self.split_datum.unit,
            group_thousands(self.split_ratio),
            self.split_ratio
        ));
        if let Some(l) = &self.lora {
            out.push_str(&format!(
                "LoRA on {} (r={}, scale={:.2}): {} adapter params, {:.2} MB adapter vs {:.2} GB full fine-tune storage\n",
                l.model,
                l.rank,
                l.scale_factor,
                l.adapter_params,
                l.adapter_storage_bytes / MB,
                l.full_finetune_storage_bytes / GB
            ));
            out.push_str(&format!(
                "fine-tune VRAM on {}: full {:.2} GB, LoRA {:.2} GB\n",
                l.model,
                l.full_finetune_vram_bytes / GB,
                l.lora_finetune_vram_bytes / GB
            ));
        }
        out
    }

    /// `key=value` lines, one per figure, 2 decimals.
    pub fn render_kv(&self) -> String {
        let mut out = format!("workload_n={}\n", self.workload_n);
        for r in &self.rows {
            for (k, v) in r.fields() {
                out.push_str(&format!("{}.{}={:.2}\n", r.framework, k, v));
            }
        }
        out.push_str(&format!("split_ratio_d={:.2}\n", self.split_ratio));
        if let Some(l) = &self.lora {
            out.push_str(&format!("lora.rank={}\n", l.rank));
            out.push_str(&format!("lora.scale_factor={:.2}\n", l.scale_factor));
            out.push_str(&format!("lora.adapter_params={}\n", l.adapter_params));
            out.push_str(&format!(
                "lora.adapter_storage_bytes={:.2}\n",
                l.adapter_storage_bytes
            ));
            out.push_str(&format!(
                "lora.full_finetune_storage_bytes={:.2}\n",
                l.full_finetune_storage_bytes
            ));
            out.push_str(&format!(
                "lora.full_finetune_vram_bytes={:.2}\n",
                l.full_finetune_vram_bytes
            ));
            out.push_str(&format!(
                "lora.lora_finetune_vram_bytes={:.2}\n",
                l.lora_finetune_vram_bytes
            ));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn square(dim: u64) -> ModelShape {
        ModelShape {
            name: "square".into(),
            total_params: dim * dim,
            num_layers: 1,
            hidden_dim: dim,
            bytes_per_param: 2,
            applies_lora_to: vec![AdaptedMatrix {
                name: "w".into(),
                d_in: dim,
                d_out: dim,
                instances_per_layer: 1,
            }],
            vram: VramFactors {
                inference: 1.0,
                full_finetune: 4.0,
                lora_finetune: 2.0,
            },
            finetune: FinetuneMethod::Full,
        }
    }

    fn gbps() -> LinkSpec {
        LinkSpec {
            rate_bits_per_s: 1e9,
            per_request_handshake_s: 0.0,
        }
    }

    fn spec(kind: Framework) -> DeploymentSpec {
        let mut edge = square(768);
        edge.name = "edge".into();
        DeploymentSpec {
            kind,
            edge_model: (kind != Framework::CloudOnly).then_some(edge),
            cloud_model: Some(square(4096)),
            split_fraction: 0.25,
            dedup_forward_fraction: 0.2,
            concise_bytes: 12.0,
            comprehensive_bytes: 95.0,
            split_datum: DatumSize {
                value: 32,
                unit: DatumUnit::Bits,
            },
        }
    }

    #[test]
    fn single_square_matrix_rank_8() {
        // 8 * (4096 + 4096)
        let n = lora_adapter_params(&square(4096), &LoraConfig::new(8, 16.0)).unwrap();
        assert_eq!(n, 65_536);
    }

    #[test]
    fn rank_at_min_dim_rejected() {
        let err = lora_adapter_params(&square(64), &LoraConfig::new(64, 16.0)).unwrap_err();
        assert_eq!(
            err,
            CostError::RankTooLarge {
                rank: 64,
                d_in: 64,
                d_out: 64
            }
        );
        // quarter boundary: 16 * 4 == 64 still too large, 15 passes
        assert!(lora_adapter_params(&square(64), &LoraConfig::new(16, 1.0)).is_err());
        assert!(lora_adapter_params(&square(64), &LoraConfig::new(15, 1.0)).is_ok());
        assert_eq!(
            lora_adapter_params(&square(64), &LoraConfig::new(0, 1.0)),
            Err(CostError::ZeroRank)
        );
    }

    #[test]
    fn split_ratio_units() {
        let bits = DatumSize {
            value: 32,
            unit: DatumUnit::Bits,
        };
        let bytes = DatumSize {
            value: 4,
            unit: DatumUnit::Bytes,
        };
        let d = split_ratio_d(4096, bits, 12.0).unwrap();
        assert_eq!(format!("{d:.2}"), "10922.67");
        let d = split_ratio_d(4096, bytes, 12.0).unwrap();
        assert_eq!(format!("{d:.2}"), "1365.33");
        let one = DatumSize {
            value: 1,
            unit: DatumUnit::Bits,
        };
        assert_eq!(split_ratio_d(1, one, 1.0).unwrap(), 1.0);
        assert!(split_ratio_d(0, one, 1.0).is_err());
        assert!(split_ratio_d(1, one, 0.0).is_err());
    }

    #[test]
    fn transmission_latency_examples() {
        let l = gbps();
        assert!((transmission_latency(10_000, 12.0, &l, true) - 0.96e-3).abs() < 1e-15);
        assert!((transmission_latency(10_000, 95.0, &l, true) - 7.6e-3).abs() < 1e-15);
        let slow = LinkSpec {
            rate_bits_per_s: 1.0,
            per_request_handshake_s: 5.0,
        };
        assert_eq!(transmission_latency(0, 1e6, &slow, false), 0.0);
        let hs = LinkSpec {
            rate_bits_per_s: 1e9,
            per_request_handshake_s: 0.01,
        };
        let shared = transmission_latency(100, 12.0, &hs, true);
        let separate = transmission_latency(100, 12.0, &hs, false);
        assert!((separate - shared - 0.99).abs() < 1e-12);
    }

    #[test]
    fn synergy_and_cloud_only_bytes() {
        let links = Links {
            end_edge: gbps(),
            edge_cloud: gbps(),
        };
        let syn = framework_cost(&spec(Framework::Synergy), &links, 10_000).unwrap();
        assert_eq!(syn.bytes_transferred_per_request, 31.0);
        let co = framework_cost(&spec(Framework::CloudOnly), &links, 10_000).unwrap();
        assert_eq!(co.bytes_transferred_per_request, 12.0);
        assert_eq!(co.edge_storage_bytes, 0.0);
    }

    #[test]
    fn offload_keeps_everything_at_edge() {
        let links = Links {
            end_edge: gbps(),
            edge_cloud: gbps(),
        };
        let s = spec(Framework::Offload);
        let row = framework_cost(&s, &links, 10).unwrap();
        assert_eq!(row.edge_cloud_bytes_per_request, 0.0);
        assert_eq!(
            row.edge_storage_bytes,
            s.cloud_model.as_ref().unwrap().weight_bytes()
        );
    }

    #[test]
    fn field_mismatch_names_field() {
        let links = Links {
            end_edge: gbps(),
            edge_cloud: gbps(),
        };
        let mut s = spec(Framework::Synergy);
        s.edge_model = None;
        let err = framework_cost(&s, &links, 1).unwrap_err();
        assert!(err.to_string().contains("edge_model"), "{err}");

        let mut s = spec(Framework::CloudOnly);
        s.edge_model = Some(square(8));
        assert!(matches!(
            framework_cost(&s, &links, 1),
            Err(CostError::UnexpectedField { field: "edge_model", .. })
        ));

        let mut s = spec(Framework::Splitting);
        s.split_fraction = 1.0;
        assert!(framework_cost(&s, &links, 1)
            .unwrap_err()
            .to_string()
            .contains("split_fraction"));
    }

    #[test]
    fn framework_names_round_trip() {
        for f in Framework::ALL {
            assert_eq!(f.as_str().parse::<Framework>().unwrap(), f);
        }
        assert!("fog".parse::<Framework>().is_err());
    }

    #[test]
    fn thousands_grouping() {
        assert_eq!(group_thousands(10_922.67), "10,922");
        assert_eq!(group_thousands(999.9), "999");
        assert_eq!(group_thousands(1_000_000.0), "1,000,000");
    }

    proptest! {
        #[test]
        fn latency_monotone(
            n in 0u64..100_000,
            dn in 0u64..1000,
            payload in 0.0f64..1e5,
            dp in 0.0f64..1e3,
            rate in 1e3f64..1e10,
            rate_up in 1.0f64..10.0,
            hs in 0.0f64..1.0,
            shared in any::<bool>(),
        ) {
            let link = LinkSpec { rate_bits_per_s: rate, per_request_handshake_s: hs };
            let faster = LinkSpec { rate_bits_per_s: rate * rate_up, ..link };
            let base = transmission_latency(n, payload, &link, shared);
            prop_assert!(transmission_latency(n + dn, payload, &link, shared) >= base);
            prop_assert!(transmission_latency(n, payload + dp, &link, shared) >= base);
            prop_assert!(transmission_latency(n, payload, &faster, shared) <= base);
        }

        #[test]
        fn lora_linear_in_rank(rank in 1u64..64, dims in 1024u64..8192) {
            let s = square(dims);
            let one = lora_adapter_params(&s, &LoraConfig::new(rank, 1.0)).unwrap();
            let two = lora_adapter_params(&s, &LoraConfig::new(rank * 2, 1.0)).unwrap();
            prop_assert_eq!(two, 2 * one);
        }

        #[test]
        fn split_ratio_scale_invariant(
            hidden in 1u64..100_000,
            datum in 1u64..64,
            input in 1u64..1000,
            k in 1u64..16,
        ) {
            let a = split_ratio_d(hidden, DatumSize { value: datum, unit: DatumUnit::Bits }, input as f64).unwrap();
            let b = split_ratio_d(hidden, DatumSize { value: datum * k, unit: DatumUnit::Bits }, (input * k) as f64).unwrap();
            prop_assert!((a - b).abs() <= 1e-9 * a.abs());
        }

        #[test]
        fn rows_finite_and_nonnegative(
            kind in prop::sample::select(Framework::ALL.to_vec()),
            frac in 0.01f64..0.99,
            fwd in 0.0f64..=1.0,
            concise in 1.0f64..1e4,
            comp in 0.0f64..1e5,
            n in 0u64..1_000_000,
        ) {
            let mut s = spec(kind);
            s.split_fraction = frac;
            s.dedup_forward_fraction = fwd;
            s.concise_bytes = concise;
            s.comprehensive_bytes = comp;
            let links = Links { end_edge: gbps(), edge_cloud: gbps() };
            let row = framework_cost(&s, &links, n).unwrap();
            for (name, v) in row.fields() {
                prop_assert!(v.is_finite() && v >= 0.0, "{} = {}", name, v);
            }
        }

        #[test]
        fn synergy_needs_less_edge_storage_than_offload(
            edge_dim in 64u64..2048,
            extra in 1u64..2048,
        ) {
            let links = Links { end_edge: gbps(), edge_cloud: gbps() };
            let mut syn = spec(Framework::Synergy);
            syn.edge_model = Some(square(edge_dim));
            syn.cloud_model = Some(square(edge_dim + extra));
            let mut off = syn.clone();
            off.kind = Framework::Offload;
            let a = framework_cost(&syn, &links, 1).unwrap();
            let b = framework_cost(&off, &links, 1).unwrap();
            prop_assert!(a.edge_storage_bytes < b.edge_storage_bytes);
        }
    }
}
