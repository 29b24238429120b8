use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cost_model::LinkSpec;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("invalid simulation parameter `{field}`: {reason}")]
    InvalidParam { field: &'static str, reason: String },
    #[error("unknown framework `{0}`")]
    UnknownFramework(String),
}

/// Workload and resource parameters for one simulated run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimParams {
    pub n_requests: u64,
    pub concise_bytes: u64,
    pub comprehensive_bytes: u64,
    pub end_edge: LinkSpec,
    pub edge_cloud: LinkSpec,
    pub cloud_infer_s_per_request: f64,
    pub edge_infer_s_per_request: f64,
    pub batch_window_s: f64,
    pub max_batch: u64,
    pub cloud_batch_speedup: f64,
    pub duplicate_fraction: f64,
    pub rng_seed: u64,
    /// Arrivals are spread uniformly over `[0, arrival_jitter_s]`.
    pub arrival_jitter_s: f64,
    /// Share of inference done at the edge under splitting.
    pub split_fraction: f64,
    /// Intermediate activation bytes per request under splitting.
    pub split_payload_bytes: u64,
}

impl SimParams {
    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |field: &'static str, reason: &str| {
            Err(SimError::InvalidParam {
                field,
                reason: reason.to_string(),
            })
        };
        for (field, v) in [
            ("cloud_infer_s_per_request", self.cloud_infer_s_per_request),
            ("edge_infer_s_per_request", self.edge_infer_s_per_request),
            ("batch_window_s", self.batch_window_s),
            ("arrival_jitter_s", self.arrival_jitter_s),
            ("end_edge.per_request_handshake_s", self.end_edge.per_request_handshake_s),
            ("edge_cloud.per_request_handshake_s", self.edge_cloud.per_request_handshake_s),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return bad(field, "must be a finite time >= 0");
            }
        }
        for (field, v) in [
            ("end_edge.rate_bits_per_s", self.end_edge.rate_bits_per_s),
            ("edge_cloud.rate_bits_per_s", self.edge_cloud.rate_bits_per_s),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return bad(field, "must be > 0");
            }
        }
        if self.max_batch == 0 {
            return bad("max_batch", "must be >= 1");
        }
        if !(self.cloud_batch_speedup.is_finite() && self.cloud_batch_speedup >= 1.0) {
            return bad("cloud_batch_speedup", "must be >= 1");
        }
        if !(0.0..=1.0).contains(&self.duplicate_fraction) {
            return bad("duplicate_fraction", "must lie in [0, 1]");
        }
        if !(0.0..=1.0).contains(&self.split_fraction) {
            return bad("split_fraction", "must lie in [0, 1]");
        }
        Ok(())
    }
}

pub fn secs_to_ns(s: f64) -> u64 {
    (s * 1e9).round() as u64
}

/// Serialization delay of `bytes` on a link, rounded to the nanosecond.
pub fn tx_time_ns(bytes: u64, link: &LinkSpec) -> u64 {
    (bytes as f64 * 8.0 * 1e9 / link.rate_bits_per_s).round() as u64
}
