use serde::Serialize;

use crate::cost_model::Framework;

use super::engine::simulate;
use super::params::{SimError, SimParams};
use super::trace::{SimEventKind, SimTrace};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimSummary {
    pub framework: Framework,
    pub n_requests: u64,
    pub delivered: u64,
    pub dedup_hits: u64,
    pub forwarded: u64,
    pub end_to_end_s: f64,
    pub mean_latency_s: f64,
    pub median_latency_s: f64,
    /// Nearest-rank 95th percentile.
    pub p95_latency_s: f64,
    pub end_edge_bytes: u64,
    pub edge_cloud_bytes: u64,
    pub total_bytes: u64,
}

impl SimSummary {
    pub fn render_kv(&self) -> String {
        format!(
            "framework={}\nn_requests={}\ndelivered={}\ndedup_hits={}\nforwarded={}\n\
             end_to_end_s={:.6}\nmean_latency_s={:.6}\nmedian_latency_s={:.6}\n\
             p95_latency_s={:.6}\nend_edge_bytes={}\nedge_cloud_bytes={}\ntotal_bytes={}\n",
            self.framework,
            self.n_requests,
            self.delivered,
            self.dedup_hits,
            self.forwarded,
            self.end_to_end_s,
            self.mean_latency_s,
            self.median_latency_s,
            self.p95_latency_s,
            self.end_edge_bytes,
            self.edge_cloud_bytes,
            self.total_bytes
        )
    }
}

fn latency_stats(latencies_ns: &[u64]) -> (f64, f64, f64) {
    if latencies_ns.is_empty() {
        return (0.0, 0.0, 0.0);
    }
    let mut sorted = latencies_ns.to_vec();
    sorted.sort_unstable();
    let n = sorted.len();
    let mean = sorted.iter().map(|&v| v as f64).sum::<f64>() / n as f64;
    let median = if n % 2 == 1 {
        sorted[n / 2] as f64
    } else {
        (sorted[n / 2 - 1] as f64 + sorted[n / 2] as f64) / 2.0
    };
    let rank = ((0.95 * n as f64).ceil() as usize).clamp(1, n);
    let p95 = sorted[rank - 1] as f64;
    (mean / 1e9, median / 1e9, p95 / 1e9)
}

/// Statistics over a trace. Byte totals are derived from event counts:
/// every arrival carries one concise prompt and every `forward_start`
/// one edge-to-cloud payload.
pub fn summarize(trace: &SimTrace) -> SimSummary {
    let p = &trace.params;
    let arrivals = trace.count(SimEventKind::Arrive) as u64;
    let forwards = trace.count(SimEventKind::ForwardStart) as u64;
    let (end_edge_bytes, edge_cloud_bytes) = match trace.framework {
        Framework::CloudOnly => (0, forwards * p.concise_bytes),
        Framework::Offload => (arrivals * p.concise_bytes, 0),
        Framework::Splitting => (
            arrivals * p.concise_bytes,
            forwards * p.split_payload_bytes,
        ),
        Framework::Synergy => (
            arrivals * p.concise_bytes,
            forwards * p.comprehensive_bytes,
        ),
    };
    let (mean, median, p95) = latency_stats(&trace.per_request_latency_ns);
    SimSummary {
        framework: trace.framework,
        n_requests: p.n_requests,
        delivered: trace.count(SimEventKind::Deliver) as u64,
        dedup_hits: trace.count(SimEventKind::DedupHit) as u64,
        forwarded: forwards,
        end_to_end_s: trace.end_to_end_s(),
        mean_latency_s: mean,
        median_latency_s: median,
        p95_latency_s: p95,
        end_edge_bytes,
        edge_cloud_bytes,
        total_bytes: end_edge_bytes + edge_cloud_bytes,
    }
}

/// All four frameworks run on shared parameters, in report order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Comparison {
    pub rows: Vec<SimSummary>,
}

impl Comparison {
    pub fn render_text(&self) -> String {
        let mut out = format!(
            "{:<12} {:>14} {:>12} {:>12} {:>12} {:>14} {:>10}\n",
            "framework", "end-to-end (s)", "mean (s)", "median (s)", "p95 (s)", "bytes", "dedup"
        );
        for r in &self.rows {
            out.push_str(&format!(
                "{:<12} {:>14.2} {:>12.2} {:>12.2} {:>12.2} {:>14} {:>10}\n",
                r.framework.as_str(),
                r.end_to_end_s,
                r.mean_latency_s,
                r.median_latency_s,
                r.p95_latency_s,
                r.total_bytes,
                r.dedup_hits
            ));
        }
        out
    }

    pub fn render_kv(&self) -> String {
        let mut out = String::new();
        for r in &self.rows {
            for line in r.render_kv().lines().skip(1) {
                out.push_str(&format!("{}.{}\n", r.framework, line));
            }
        }
        out
    }
}

pub fn compare_frameworks(p: &SimParams) -> Result<Comparison, SimError> {
    let rows = Framework::ALL
        .into_iter()
        .map(|f| simulate(f, p).map(|t| summarize(&t)))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Comparison { rows })
}
