use std::path::PathBuf;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use synergy_core::config::{read_document, CoreConfig};
use synergy_core::cost_model::{framework_cost, Framework, LinkSpec, Links};
use synergy_core::latency_sim::{
    check, compare_frameworks, parse_event_log, simulate, summarize, tx_time_ns, SimEventKind,
    SimParams,
};

fn defaults() -> CoreConfig {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../defaults.paper.conf");
    CoreConfig::from_document(&read_document(&path).unwrap()).unwrap()
}

fn within(actual: f64, target: f64, rel: f64) -> bool {
    (actual - target).abs() <= rel * target
}

#[test]
fn calibrated_end_to_end() {
    let p = defaults().sim_params().unwrap();
    assert_eq!(p.n_requests, 100);
    let t = Instant::now();
    let cloud = simulate(Framework::CloudOnly, &p).unwrap();
    let synergy = simulate(Framework::Synergy, &p).unwrap();
    assert!(t.elapsed().as_secs_f64() < 2.0);
    assert!(within(cloud.end_to_end_s(), 20.19, 0.01), "{}", cloud.end_to_end_s());
    assert!(within(synergy.end_to_end_s(), 3.35, 0.01), "{}", synergy.end_to_end_s());
}

#[test]
fn empty_workload() {
    let mut p = defaults().sim_params().unwrap();
    p.n_requests = 0;
    for f in Framework::ALL {
        let t = simulate(f, &p).unwrap();
        assert!(t.events.is_empty());
        assert_eq!(t.end_to_end_s(), 0.0);
        assert_eq!(summarize(&t).total_bytes, 0);
    }
}

#[test]
fn traces_are_byte_identical_per_seed() {
    let p = defaults().sim_params().unwrap();
    for f in Framework::ALL {
        let a = simulate(f, &p).unwrap().to_event_log();
        let b = simulate(f, &p).unwrap().to_event_log();
        assert_eq!(a, b);
    }
}

#[test]
fn seed_only_moves_duplicates() {
    let mut p = defaults().sim_params().unwrap();
    p.duplicate_fraction = 0.0;
    let a = simulate(Framework::Synergy, &p).unwrap();
    p.rng_seed += 1;
    let b = simulate(Framework::Synergy, &p).unwrap();
    assert_eq!(a.per_request_latency_ns, b.per_request_latency_ns);
    assert_eq!(summarize(&a).dedup_hits, 0);
}

#[test]
fn offload_without_compute_is_pure_uplink() {
    let mut p = defaults().sim_params().unwrap();
    p.edge_infer_s_per_request = 0.0;
    p.duplicate_fraction = 0.0;
    let t = simulate(Framework::Offload, &p).unwrap();
    let tx = tx_time_ns(p.concise_bytes, &p.end_edge);
    assert_eq!(t.end_to_end_ns, p.n_requests * tx);
    for (i, &lat) in t.per_request_latency_ns.iter().enumerate() {
        assert_eq!(lat, (i as u64 + 1) * tx);
    }
}

#[test]
fn synergy_beats_cloud_only_and_rows_are_ordered() {
    let cmp = compare_frameworks(&defaults().sim_params().unwrap()).unwrap();
    let order: Vec<Framework> = cmp.rows.iter().map(|r| r.framework).collect();
    assert_eq!(order, Framework::ALL.to_vec());
    let e2e = |f| cmp.rows.iter().find(|r| r.framework == f).unwrap().end_to_end_s;
    assert!(e2e(Framework::Synergy) < e2e(Framework::CloudOnly));
    assert!(cmp.render_text().contains("synergy"));
}

#[test]
fn synergy_forward_bytes_match_event_count() {
    let mut p = defaults().sim_params().unwrap();
    p.n_requests = 10_000;
    let t = simulate(Framework::Synergy, &p).unwrap();
    let forwards = t
        .events
        .iter()
        .filter(|e| e.kind == SimEventKind::ForwardStart)
        .count() as u64;
    let s = summarize(&t);
    assert_eq!(s.forwarded, forwards);
    assert_eq!(s.edge_cloud_bytes, forwards * 95);
    assert_eq!(s.delivered + s.dedup_hits, 10_000);
}

#[test]
fn event_log_round_trips() {
    let t = simulate(Framework::Synergy, &defaults().sim_params().unwrap()).unwrap();
    let (header, events) = parse_event_log(&t.to_event_log()).unwrap();
    assert_eq!(header.framework, Framework::Synergy);
    assert_eq!(header.n_requests, 100);
    assert_eq!(events, t.events);
    assert!(parse_event_log("# sim-trace v1 framework=synergy n=1 seed=0\n5\tarrive\n")
        .unwrap_err()
        .starts_with("line 2"));
}

#[test]
fn checker_catches_idle_cloud() {
    let mut t = simulate(Framework::CloudOnly, &defaults().sim_params().unwrap()).unwrap();
    check::all(&t).unwrap();
    let pos = t
        .events
        .iter()
        .rposition(|e| e.kind == SimEventKind::CloudStart)
        .unwrap();
    t.events[pos].time_ns += 1;
    assert!(check::cloud_work_conservation(&t).is_err());
}

fn random_params(rng: &mut ChaCha8Rng) -> SimParams {
    let link = |rng: &mut ChaCha8Rng| LinkSpec {
        rate_bits_per_s: 10f64.powf(rng.gen_range(6.0..10.0)),
        per_request_handshake_s: rng.gen_range(0.0..0.05),
    };
    SimParams {
        n_requests: rng.gen_range(0..300),
        concise_bytes: rng.gen_range(1..200),
        comprehensive_bytes: rng.gen_range(1..2000),
        end_edge: link(rng),
        edge_cloud: link(rng),
        cloud_infer_s_per_request: rng.gen_range(0.0..0.3),
        edge_infer_s_per_request: rng.gen_range(0.0..0.1),
        batch_window_s: rng.gen_range(0.0..0.05),
        max_batch: rng.gen_range(1..64),
        cloud_batch_speedup: rng.gen_range(1.0..8.0),
        duplicate_fraction: rng.gen_range(0.0..=1.0),
        rng_seed: rng.gen(),
        arrival_jitter_s: if rng.gen_bool(0.5) { 0.0 } else { rng.gen_range(0.0..2.0) },
        split_fraction: rng.gen_range(0.05..0.95),
        split_payload_bytes: 0,
    }
}

#[test]
fn random_draws_hold_invariants_and_match_cost_model() {
    let cfg = defaults();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for draw in 0..50 {
        let mut p = random_params(&mut rng);
        for f in Framework::ALL {
            let mut spec = cfg.deployment_spec(f);
            spec.concise_bytes = p.concise_bytes as f64;
            spec.comprehensive_bytes = p.comprehensive_bytes as f64;
            spec.split_fraction = p.split_fraction;
            p.split_payload_bytes = spec.split_payload_bytes().unwrap().round() as u64;

            let trace = simulate(f, &p).unwrap();
            check::all(&trace).unwrap_or_else(|e| panic!("draw {draw} {f}: {e}"));
            let s = summarize(&trace);
            if f == Framework::Synergy {
                assert_eq!(s.delivered + s.dedup_hits, p.n_requests);
            } else {
                assert_eq!(s.delivered, p.n_requests);
            }

            spec.dedup_forward_fraction = if p.n_requests == 0 {
                0.0
            } else {
                s.forwarded as f64 / p.n_requests as f64
            };
            let links = Links {
                end_edge: p.end_edge,
                edge_cloud: p.edge_cloud,
            };
            let row = framework_cost(&spec, &links, p.n_requests).unwrap();
            assert_eq!(
                row.total_bytes(p.n_requests).round() as u64,
                s.total_bytes,
                "draw {draw} {f}"
            );
        }
    }
}
