//! Fits the `[sim]` service times so the simulator hits two target
//! end-to-end latencies: 20.19 s for cloud-only and 3.35 s for synergy,
//! both at `sim.n_requests`.
//!
//! The cloud per-request time comes from the closed form for a serial
//! server behind per-request handshakes. With `cloud_batch_speedup` held at
//! its configured value, the edge per-request time is then found by
//! bisection. Prints a `[sim]` fragment to paste into the config.
//!
//! ```text
//! cargo run -p synergy-core --example calibrate [-- path/to/config]
//! ```

use std::path::PathBuf;

use synergy_core::config::{read_document, CoreConfig};
use synergy_core::cost_model::Framework;
use synergy_core::latency_sim::{simulate, tx_time_ns, SimParams};

const CLOUD_ONLY_TARGET_S: f64 = 20.19;
const SYNERGY_TARGET_S: f64 = 3.35;

fn e2e(framework: Framework, p: &SimParams) -> f64 {
    simulate(framework, p).expect("valid params").end_to_end_s()
}

fn main() {
    let path = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| {
        PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../defaults.paper.conf")
    });
    let doc = read_document(&path).unwrap_or_else(|e| panic!("{e}"));
    let cfg = CoreConfig::from_document(&doc).unwrap_or_else(|e| panic!("{e}"));
    let mut p = cfg.sim_params().expect("sim params");
    let n = p.n_requests as f64;
    let h = p.edge_cloud.per_request_handshake_s;

    // The first request reaches the cloud after one serialization delay;
    // the server then runs n back-to-back (handshake + inference) jobs.
    let first_tx = tx_time_ns(p.concise_bytes, &p.edge_cloud) as f64 / 1e9;
    let c = (CLOUD_ONLY_TARGET_S - first_tx) / n - h;
    p.cloud_infer_s_per_request = (c * 1e6).round() / 1e6;
    let cloud_only = e2e(Framework::CloudOnly, &p);

    let (mut lo, mut hi) = (0.0f64, 10.0f64);
    p.edge_infer_s_per_request = lo;
    if e2e(Framework::Synergy, &p) > SYNERGY_TARGET_S {
        eprintln!("synergy exceeds the target with free edge inference; raise cloud_batch_speedup");
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        p.edge_infer_s_per_request = mid;
        if e2e(Framework::Synergy, &p) > SYNERGY_TARGET_S {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    p.edge_infer_s_per_request = (lo * 1e6).round() / 1e6;
    let synergy = e2e(Framework::Synergy, &p);

    println!("# fitted against {}", path.display());
    println!("cloud_infer_s_per_request = {}", p.cloud_infer_s_per_request);
    println!("edge_infer_s_per_request = {}", p.edge_infer_s_per_request);
    println!("cloud_batch_speedup = {}", p.cloud_batch_speedup);
    println!("# cloud-only end-to-end = {cloud_only:.4} s (target {CLOUD_ONLY_TARGET_S})");
    println!("# synergy end-to-end    = {synergy:.4} s (target {SYNERGY_TARGET_S})");
}
