//! Acceptance gate. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails. Every tolerance is a constant below.

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use synergy_core::config::{read_document, CoreConfig};
use synergy_core::cost_model::{
    framework_cost, group_thousands, lora_adapter_bytes, split_ratio_d, transmission_latency, DatumSize,
    DatumUnit, Framework, LinkSpec, Links, GB,
};
use synergy_core::latency_sim::{check, simulate, summarize, SimParams};
use synergy_core::netmgmt::{
    bucketize, extract_intent_rules, parse_intent_dataset, parse_template_line, predict_baseline,
    render_template_line, score, score_intents, split_train_test, Baseline, IntervalDataset, KeywordSet,
    TemplateEntry, ViewingRecord, Window,
};
use synergy_core::protocol::{decode, encode, normalize_for_dedup, PromptEnvelope, Stage};
use synergy_serve::backend::{Backend, CountingBackend, GenerationSettings, MockBackend, MockSettings};
use synergy_serve::client::{send_prompts, OutgoingPrompt};
use synergy_serve::cloud::{AdapterRegistry, CloudService, RunningCloud};
use synergy_serve::corpus::{concise_vocabulary, synthetic_profiles};
use synergy_serve::dedup::{DedupCache, Lookup};
use synergy_serve::edge::{EdgeSettings, RunningEdge};
use synergy_serve::profile::ProfileStore;

// criterion 1
const D_TARGET: f64 = 10_922.67;
const D_DECIMALS_TOL: f64 = 0.005;
const D_MAX_RUNTIME: Duration = Duration::from_millis(1);
// criterion 2
const LATENCY_ABS_TOL_S: f64 = 1e-15;
// criterion 4
const SIM_REL_TOL: f64 = 0.01;
const SIM_MAX_WALL: Duration = Duration::from_secs(1);
// criterion 5
const ADAPTER_MIN_BYTES: f64 = 16e6;
const ADAPTER_MAX_BYTES: f64 = 80e6;
const FULL_STORAGE_TARGET: f64 = 12.55e9;
const FULL_STORAGE_REL_TOL: f64 = 0.10;
// criterion 6 and 9
const PROTOCOL_DRAWS: usize = 10_000;
const NETMGMT_DRAWS: usize = 1_000;
const GOLDEN_MIN_EXACT: f64 = 0.95;
// criterion 7
const DEDUP_PROMPTS: usize = 5_000;
const DEDUP_INJECTED: f64 = 0.30;
// criterion 8
const SIM_DRAWS: usize = 50;
// criterion 10
const LOOPBACK_CLIENTS: usize = 100;
const LOOPBACK_MAX_WALL: Duration = Duration::from_secs(5);

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn repo(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..").join(rel)
}

fn defaults() -> CoreConfig {
    CoreConfig::from_document(&read_document(&repo("defaults.paper.conf")).unwrap()).unwrap()
}

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        let ok: bool = $cond;
        if !ok {
            return Err(format!($($msg)+));
        }
    };
}

fn within_rel(actual: f64, target: f64, rel: f64) -> bool {
    (actual - target).abs() <= rel * target.abs()
}

fn c1_split_ratio() -> Outcome {
    let datum = DatumSize {
        value: 32,
        unit: DatumUnit::Bits,
    };
    let t = Instant::now();
    let d = split_ratio_d(4096, datum, 12.0).map_err(|e| e.to_string())?;
    let elapsed = t.elapsed();
    // the datum counts in the unit it is given in
    let oracle = 4096.0 * 32.0 / 12.0;
    ensure!(d == oracle, "D = {d}, oracle {oracle}");
    ensure!((d - D_TARGET).abs() < D_DECIMALS_TOL, "D = {d:.2}");
    ensure!(group_thousands(d) == "10,922", "rendered {}", group_thousands(d));
    ensure!(elapsed < D_MAX_RUNTIME, "took {elapsed:?}");
    let text = defaults().cost_report(&Framework::ALL).map_err(|e| e.to_string())?.render_text();
    ensure!(text.contains("≈10,922 (10922.67)"), "report lacks D row");
    Ok(format!("D = {d:.2} rendered ≈{} in {elapsed:?}", group_thousands(d)))
}

fn c2_transmission() -> Outcome {
    let link = LinkSpec {
        rate_bits_per_s: 1e9,
        per_request_handshake_s: 0.0,
    };
    let concise = transmission_latency(10_000, 12.0, &link, false);
    let comprehensive = transmission_latency(10_000, 95.0, &link, false);
    ensure!((concise - 0.96e-3).abs() <= LATENCY_ABS_TOL_S, "12 B: {concise} s");
    ensure!((comprehensive - 7.6e-3).abs() <= LATENCY_ABS_TOL_S, "95 B: {comprehensive} s");
    // the shipped end-edge link has no handshake, so the offload row is pure serialization
    let report = defaults().cost_report(&[Framework::Offload]).map_err(|e| e.to_string())?;
    let row = report.rows[0].transmission_latency_s;
    ensure!((row - 0.96e-3).abs() <= LATENCY_ABS_TOL_S, "offload row {row} s");
    Ok(format!("{:.2} ms and {:.2} ms", concise * 1e3, comprehensive * 1e3))
}

fn c3_per_request_bytes() -> Outcome {
    let cfg = defaults();
    ensure!(cfg.synergy.dedup_forward_fraction == 0.2, "dedup_forward_fraction is {}", cfg.synergy.dedup_forward_fraction);
    let report = cfg.cost_report(&[Framework::CloudOnly, Framework::Synergy]).map_err(|e| e.to_string())?;
    let cloud = report.rows[0].bytes_transferred_per_request;
    let synergy = report.rows[1].bytes_transferred_per_request;
    ensure!(cloud == 12.0, "cloud-only {cloud}");
    ensure!(synergy == 31.0, "synergy {synergy}");
    let oracle = cfg.workload.concise_bytes as f64 + cfg.workload.comprehensive_bytes as f64 * 0.2;
    ensure!(synergy == oracle, "synergy {synergy} vs oracle {oracle}");
    Ok(format!("synergy {synergy} B, cloud-only {cloud} B"))
}

fn c4_calibrated_sim() -> Outcome {
    let mut parts = Vec::new();
    for (fw, target) in [("cloud-only", 20.19), ("synergy", 3.35)] {
        let out = tempfile::tempdir().map_err(|e| e.to_string())?;
        let t = Instant::now();
        let run = Command::new(env!("CARGO_BIN_EXE_synergy"))
            .arg("--config")
            .arg(repo("defaults.paper.conf"))
            .arg("--out")
            .arg(out.path())
            .args(["simulate", fw, "--n", "100"])
            .output()
            .map_err(|e| e.to_string())?;
        let wall = t.elapsed();
        ensure!(run.status.success(), "{fw}: {}", String::from_utf8_lossy(&run.stderr));
        ensure!(wall < SIM_MAX_WALL, "{fw} took {wall:?}");
        let kv = std::fs::read_to_string(out.path().join(format!("sim_{fw}_summary.kv"))).map_err(|e| e.to_string())?;
        let e2e: f64 = kv
            .lines()
            .find_map(|l| l.strip_prefix("end_to_end_s="))
            .ok_or("no end_to_end_s")?
            .parse()
            .map_err(|e| format!("{e}"))?;
        ensure!(within_rel(e2e, target, SIM_REL_TOL), "{fw}: {e2e} s vs {target} s");
        parts.push(format!("{fw} {e2e:.2} s ({} ms wall)", wall.as_millis()));
    }
    Ok(parts.join(", "))
}

fn c5_lora() -> Outcome {
    let cfg = defaults();
    let cloud = &cfg.models.cloud;
    ensure!(cfg.lora.rank == 8, "rank {}", cfg.lora.rank);
    let adapter = lora_adapter_bytes(cloud, &cfg.lora).map_err(|e| e.to_string())?;
    // oracle: r * (d_in + d_out) per adapted matrix, per layer
    let oracle_params: u64 = cloud
        .applies_lora_to
        .iter()
        .map(|m| cfg.lora.rank * (m.d_in + m.d_out) * m.instances_per_layer * cloud.num_layers)
        .sum();
    ensure!(adapter == oracle_params as f64 * f64::from(cfg.lora.adapter_bytes_per_param), "adapter {adapter} B vs oracle");
    ensure!((ADAPTER_MIN_BYTES..=ADAPTER_MAX_BYTES).contains(&adapter), "adapter {adapter} B");
    let storage = cloud.total_params as f64 * f64::from(cloud.bytes_per_param);
    ensure!(cloud.bytes_per_param == 2, "bytes_per_param {}", cloud.bytes_per_param);
    ensure!(cloud.weight_bytes() == storage, "weight bytes {}", cloud.weight_bytes());
    ensure!(within_rel(storage, FULL_STORAGE_TARGET, FULL_STORAGE_REL_TOL), "storage {storage}");
    let vram = [
        ("cloud full fine-tune", cloud.full_finetune_vram(), "112.00"),
        ("cloud LoRA fine-tune", cloud.lora_finetune_vram(), "28.00"),
        ("edge inference", cfg.models.edge.inference_vram(), "1.65"),
    ];
    for (what, bytes, want) in vram {
        let got = format!("{:.2}", bytes / GB);
        ensure!(got == want, "{what}: {got} GB, configured {want} GB");
    }
    Ok(format!(
        "adapter {:.2} MB, full storage {:.2} GB, VRAM 112.00/28.00/1.65 GB",
        adapter / 1e6,
        storage / GB
    ))
}

const ALPHABET: &[char] = &[
    'a', 'b', 'Z', ' ', ' ', '\t', '\n', '\r', '\\', '=', '?', '!', '.', ',', 'é', '漢', '😀', '\u{3000}', '0',
    '\'',
];

fn random_text(rng: &mut ChaCha8Rng, max: usize) -> String {
    let len = rng.gen_range(0..=max);
    (0..len).map(|_| ALPHABET[rng.gen_range(0..ALPHABET.len())]).collect()
}

fn golden_envelopes() -> Vec<(&'static str, PromptEnvelope)> {
    let concise = PromptEnvelope::concise(1, "best libraries", "bs-001", 1_700_000_000_000);
    let comprehensive = concise
        .promote(
            Stage::Comprehensive,
            "best libraries. The city library holds rare collections. \
             I would like to know more about it around Riverside.",
        )
        .unwrap();
    let mut response = concise
        .promote(Stage::Response, "Riverside Central Library:\nrare books, open 9-17.")
        .unwrap();
    response.terminated_at_edge = true;
    vec![("concise", concise), ("comprehensive", comprehensive), ("response", response)]
}

/// Hex blocks under `<!-- golden:NAME -->` markers in PROTOCOL.md.
fn documented_frames() -> BTreeMap<String, Vec<u8>> {
    let doc = std::fs::read_to_string(repo("PROTOCOL.md")).unwrap();
    let mut out = BTreeMap::new();
    let mut lines = doc.lines();
    while let Some(line) = lines.next() {
        let Some(name) = line.trim().strip_prefix("<!-- golden:") else {
            continue;
        };
        let name = name.trim_end_matches("-->").trim().to_string();
        lines.next();
        let mut bytes = Vec::new();
        for l in lines.by_ref() {
            if l == "```" {
                break;
            }
            let hex = l.split_once(": ").unwrap().1.split("  |").next().unwrap();
            bytes.extend(hex.split_whitespace().map(|h| u8::from_str_radix(h, 16).unwrap()));
        }
        out.insert(name, bytes);
    }
    out
}

fn c6_protocol() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for i in 0..PROTOCOL_DRAWS {
        let stage = [Stage::Concise, Stage::Comprehensive, Stage::Response][rng.gen_range(0..3)];
        let mut text = random_text(&mut rng, 120);
        if text.is_empty() && stage != Stage::Response {
            text.push('x');
        }
        let mut origin = random_text(&mut rng, 12);
        if origin.is_empty() {
            origin.push('b');
        }
        let mut env = PromptEnvelope::new(rng.gen(), stage, text, origin, rng.gen());
        env.terminated_at_edge = stage == Stage::Response && rng.gen();
        let bytes = encode(&env).map_err(|e| e.to_string())?;
        let (back, used) = decode(&bytes).map_err(|e| format!("draw {i}: {e}"))?;
        ensure!(used == bytes.len() && back == env, "draw {i} differs");
    }
    let documented = documented_frames();
    ensure!(documented.len() == 3, "{} golden frames documented", documented.len());
    for (name, env) in golden_envelopes() {
        let first = encode(&env).map_err(|e| e.to_string())?;
        let second = encode(&env).map_err(|e| e.to_string())?;
        ensure!(first == second, "{name} encoding unstable");
        ensure!(documented.get(name) == Some(&first), "{name} differs from PROTOCOL.md");
    }
    for i in 0..PROTOCOL_DRAWS {
        let s = random_text(&mut rng, 40);
        let once = normalize_for_dedup(&s);
        ensure!(normalize_for_dedup(&once) == once, "string {i} {s:?}");
    }
    Ok(format!("{PROTOCOL_DRAWS} round trips, 3 golden frames, {PROTOCOL_DRAWS} normalizations"))
}

fn dedup_corpus(seed: u64) -> Vec<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out: Vec<String> = Vec::with_capacity(DEDUP_PROMPTS);
    for i in 0..DEDUP_PROMPTS {
        if i > 0 && rng.gen_bool(DEDUP_INJECTED) {
            let base = out[rng.gen_range(0..out.len())].clone();
            let varied: String = base
                .split(' ')
                .map(|w| if rng.gen_bool(0.5) { w.to_uppercase() } else { w.to_lowercase() })
                .collect::<Vec<_>>()
                .join(if rng.gen_bool(0.5) { "  " } else { " " });
            out.push(if rng.gen_bool(0.3) { format!("{varied}?") } else { varied });
        } else {
            out.push(format!("prompt {} about {}", rng.gen_range(0..1_000_000), rng.gen_range(0..50)));
        }
    }
    out
}

fn edge_settings(cloud_addr: String) -> EdgeSettings {
    EdgeSettings {
        listen: "127.0.0.1:0".into(),
        metrics_listen: None,
        cloud_addr,
        profiles_dir: PathBuf::from("unused"),
        backend: synergy_serve::backend::BackendKind::Mock,
        dedup_ttl_s: 300.0,
        dedup_capacity: 10_000,
        batch_window_s: 0.01,
        max_batch: 32,
        termination_threshold: 0.9,
        request_timeout_s: 30.0,
    }
}

struct Pipeline {
    cloud: RunningCloud,
    edge: RunningEdge,
    responder: Arc<CountingBackend>,
}

async fn start_pipeline() -> Pipeline {
    let gen = GenerationSettings::default();
    let mock: Arc<dyn Backend> = Arc::new(MockBackend::new(MockSettings::default()));
    let responder = Arc::new(CountingBackend::new(mock.clone()));
    let cloud = RunningCloud::start(
        "127.0.0.1:0",
        CloudService::new(responder.clone(), gen, AdapterRegistry::default()),
    )
    .await
    .unwrap();
    let profiles = ProfileStore::new(synthetic_profiles()).unwrap();
    let edge = RunningEdge::start(edge_settings(cloud.addr.to_string()), gen, profiles, mock)
        .await
        .unwrap();
    Pipeline { cloud, edge, responder }
}

fn c7_dedup() -> Outcome {
    let corpus = dedup_corpus(7);
    let mut cache = DedupCache::new(1e9, 10_000);
    let mut duplicates = 0;
    for (i, text) in corpus.iter().enumerate() {
        let env = PromptEnvelope::concise(i as u64, text.clone(), "bs-001", 1);
        let norm = normalize_for_dedup(text);
        // brute force: compare against every earlier normalized prompt
        let oracle = corpus[..i].iter().any(|t| normalize_for_dedup(t) == norm);
        let decision = cache.lookup(env.dedup_key, i as u64, i as f64);
        ensure!((decision != Lookup::Fresh) == oracle, "prompt {i} {text:?}: cache {decision:?}, oracle {oracle}");
        if oracle {
            duplicates += 1;
        } else if i % 2 == 0 {
            cache.complete(env.dedup_key, i as u64, format!("answer {i}"));
        }
    }
    let share = duplicates as f64 / DEDUP_PROMPTS as f64;
    ensure!((0.25..=0.35).contains(&share), "injected share {share}");

    let prompts: Vec<OutgoingPrompt> = corpus
        .iter()
        .map(|t| OutgoingPrompt {
            bs_id: "bs-001".into(),
            text: t.clone(),
        })
        .collect();
    let rt = tokio::runtime::Runtime::new().map_err(|e| e.to_string())?;
    let (responses, hits) = rt.block_on(async {
        let p = start_pipeline().await;
        let res = send_prompts(&p.edge.addr.to_string(), &prompts, Duration::from_secs(60)).await;
        let hits = p.edge.service.metrics().snapshot().dedup_hits;
        p.edge.shutdown();
        p.cloud.shutdown();
        (res, hits)
    });
    let responses = responses.map_err(|e| e.to_string())?;
    ensure!(responses.len() == DEDUP_PROMPTS, "{} responses", responses.len());
    for (i, r) in responses.iter().enumerate() {
        ensure!(r.request_id == i as u64 + 1, "response {i} has id {}", r.request_id);
        ensure!(r.stage == Stage::Response && !r.is_error(), "response {i}: {:?}", r.text);
    }
    ensure!(hits == duplicates as u64, "live dedup hits {hits}, oracle {duplicates}");
    Ok(format!(
        "{duplicates} duplicates of {DEDUP_PROMPTS} matched; {} loopback responses, one per request",
        responses.len()
    ))
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

fn c8_simulator() -> Outcome {
    let cfg = defaults();
    let base = cfg.sim_params().map_err(|e| e.to_string())?;
    for f in Framework::ALL {
        let a = simulate(f, &base).map_err(|e| e.to_string())?.to_event_log();
        let b = simulate(f, &base).map_err(|e| e.to_string())?.to_event_log();
        ensure!(a == b, "{f}: traces differ for one seed");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for draw in 0..SIM_DRAWS {
        let mut p = random_params(&mut rng);
        for f in Framework::ALL {
            let mut spec = cfg.deployment_spec(f);
            spec.concise_bytes = p.concise_bytes as f64;
            spec.comprehensive_bytes = p.comprehensive_bytes as f64;
            spec.split_fraction = p.split_fraction;
            p.split_payload_bytes = spec.split_payload_bytes().map_err(|e| e.to_string())?.round() as u64;
            let trace = simulate(f, &p).map_err(|e| e.to_string())?;
            check::conservation(&trace).map_err(|e| format!("draw {draw} {f}: {e}"))?;
            check::cloud_work_conservation(&trace).map_err(|e| format!("draw {draw} {f}: {e}"))?;
            check::all(&trace).map_err(|e| format!("draw {draw} {f}: {e}"))?;
            let s = summarize(&trace);
            ensure!(s.delivered + s.dedup_hits == p.n_requests, "draw {draw} {f}: conservation");
            spec.dedup_forward_fraction = if p.n_requests == 0 {
                0.0
            } else {
                s.forwarded as f64 / p.n_requests as f64
            };
            let links = Links {
                end_edge: p.end_edge,
                edge_cloud: p.edge_cloud,
            };
            let row = framework_cost(&spec, &links, p.n_requests).map_err(|e| e.to_string())?;
            let cost_bytes = row.total_bytes(p.n_requests).round() as u64;
            ensure!(cost_bytes == s.total_bytes, "draw {draw} {f}: cost model {cost_bytes} B, simulator {} B", s.total_bytes);
        }
    }
    Ok(format!("determinism on 4 frameworks, {SIM_DRAWS} draws x 4 frameworks consistent"))
}

/// Membership oracle: scans the raw records for every (interval, title) cell.
fn brute_bucketize(records: &[ViewingRecord], len: i64, k: usize, start: i64, end: i64) -> IntervalDataset {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for r in records.iter().filter(|r| r.timestamp >= start && r.timestamp < end) {
        *counts.entry(&r.title).or_default() += 1;
    }
    let mut ranked: Vec<(&str, usize)> = counts.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
    let titles: Vec<String> = ranked.iter().take(k).map(|(t, _)| t.to_string()).collect();
    let (mut intervals, mut labels) = (Vec::new(), Vec::new());
    let mut i = 0i64;
    while start + i * len < end {
        let lo = start + i * len;
        let hi = (lo + len).min(end);
        labels.push(
            titles
                .iter()
                .map(|t| records.iter().any(|r| &r.title == t && r.timestamp >= lo && r.timestamp < hi))
                .collect(),
        );
        intervals.push(i as u64);
        i += 1;
    }
    IntervalDataset {
        interval_len_s: len,
        window_start: start,
        intervals,
        titles,
        labels,
    }
}

fn c9_netmgmt() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let titles: Vec<String> = (0..30).map(|i| format!("Title {i:02}")).collect();
    let records: Vec<ViewingRecord> = (0..NETMGMT_DRAWS)
        .map(|_| ViewingRecord {
            timestamp: rng.gen_range(0..60 * 21_600),
            title: titles[rng.gen_range(0..titles.len())].clone(),
        })
        .collect();
    let (start, end) = (10_000, 50 * 21_600 + 777);
    let got = bucketize(&records, 21_600, 20, Window::Explicit { start, end }).map_err(|e| e.to_string())?;
    ensure!(got == brute_bucketize(&records, 21_600, 20, start, end), "bucketize differs from oracle");

    let alphabet: Vec<char> = "abcXYZ 0129'',:.-&é漢!?".chars().collect();
    for i in 0..NETMGMT_DRAWS {
        let len = rng.gen_range(1..25);
        let title: String = (0..len).map(|_| *alphabet.choose(&mut rng).unwrap()).collect();
        let e = TemplateEntry {
            interval: rng.gen(),
            title,
            label: rng.gen(),
        };
        let line = render_template_line(&e).map_err(|e| e.to_string())?;
        ensure!(parse_template_line(&line, 1).as_ref() == Ok(&e), "triple {i}: {line:?}");
    }

    for n in [20usize, 100, 730, 1000] {
        let ds = IntervalDataset {
            interval_len_s: 1,
            window_start: 0,
            intervals: (0..n as u64).collect(),
            titles: vec!["t".into()],
            labels: vec![vec![false]; n],
        };
        let (train, test) = split_train_test(&ds, 0.95).map_err(|e| e.to_string())?;
        let want = n * 95 / 100;
        ensure!(train.len() == want && test.len() == n - want, "n={n}: {}/{}", train.len(), test.len());
    }

    let golden = parse_intent_dataset(
        &std::fs::read_to_string(repo("data/intent_golden.tsv")).map_err(|e| e.to_string())?,
    )
    .map_err(|e| e.to_string())?;
    ensure!(golden.len() == 50, "{} golden samples", golden.len());
    let reference = &golden[0];
    let first = score_intents(&[extract_intent_rules(&reference.utterance)], std::slice::from_ref(&reference.keywords))
        .map_err(|e| e.to_string())?;
    ensure!(first.exact_match == 1.0, "reference sentence: {first:?}");
    let pred: Vec<KeywordSet> = golden.iter().map(|s| extract_intent_rules(&s.utterance)).collect();
    let gold: Vec<KeywordSet> = golden.iter().map(|s| s.keywords.clone()).collect();
    let all = score_intents(&pred, &gold).map_err(|e| e.to_string())?;
    ensure!(all.exact_match >= GOLDEN_MIN_EXACT, "golden exact match {}", all.exact_match);

    // title 0 alternates with period 2; title 1 is present 3 intervals in 4
    let n = 200;
    let labels: Vec<Vec<bool>> = (0..n).map(|i| vec![i % 2 == 0, i % 4 != 3]).collect();
    let periodic = IntervalDataset {
        interval_len_s: 21_600,
        window_start: 0,
        intervals: (0..n as u64).collect(),
        titles: vec!["alternating".into(), "mostly".into()],
        labels,
    };
    let (train, test) = split_train_test(&periodic, 0.95).map_err(|e| e.to_string())?;
    let acc = |m| score(&predict_baseline(&train, m, test.len()), &test.labels).map(|s| s.accuracy);
    let markov = acc(Baseline::Markov1).map_err(|e| e.to_string())?;
    let freq = acc(Baseline::Frequency).map_err(|e| e.to_string())?;
    ensure!(markov > freq, "markov1 {markov} vs frequency {freq}");

    Ok(format!(
        "oracle match on {NETMGMT_DRAWS} records, {NETMGMT_DRAWS} bijections, splits exact, golden exact {:.2}, markov1 {markov:.2} > frequency {freq:.2}",
        all.exact_match
    ))
}

fn c10_loopback() -> Outcome {
    let profiles = synthetic_profiles();
    let vocab = concise_vocabulary();
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let prompts: Vec<OutgoingPrompt> = (0..LOOPBACK_CLIENTS)
        .map(|i| OutgoingPrompt {
            bs_id: profiles[i % profiles.len()].bs_id.clone(),
            text: vocab.choose(&mut rng).unwrap().to_string(),
        })
        .collect();
    let rt = tokio::runtime::Runtime::new().map_err(|e| e.to_string())?;
    rt.block_on(async {
        let p = start_pipeline().await;
        let addr = p.edge.addr.to_string();
        let t = Instant::now();
        let tasks: Vec<_> = prompts
            .iter()
            .cloned()
            .map(|prompt| {
                let addr = addr.clone();
                tokio::spawn(async move { send_prompts(&addr, &[prompt], Duration::from_secs(10)).await })
            })
            .collect();
        let mut responses = Vec::new();
        for (i, task) in tasks.into_iter().enumerate() {
            let got = task.await.map_err(|e| e.to_string())?.map_err(|e| format!("client {i}: {e}"))?;
            ensure!(got.len() == 1, "client {i}: {} responses", got.len());
            responses.push(got.into_iter().next().unwrap());
        }
        let wall = t.elapsed();
        let stats = p.edge.service.metrics().snapshot();
        let cloud_calls = p.responder.batch_calls();
        p.edge.shutdown();
        p.cloud.shutdown();

        let mut at_edge = 0;
        for (i, (r, sent)) in responses.iter().zip(&prompts).enumerate() {
            ensure!(r.stage == Stage::Response, "client {i}: stage {}", r.stage);
            ensure!(r.request_id == 1 && r.origin_bs_id == sent.bs_id, "client {i}: envelope {r:?}");
            ensure!(!r.is_error() && !r.text.is_empty(), "client {i}: {:?}", r.text);
            at_edge += usize::from(r.terminated_at_edge);
        }
        let forwarded = LOOPBACK_CLIENTS - at_edge;
        ensure!(forwarded == 0 || cloud_calls > 0, "{forwarded} forwarded but the cloud never ran");
        ensure!(stats.requests == LOOPBACK_CLIENTS as u64, "edge saw {} requests", stats.requests);
        ensure!(stats.responses == LOOPBACK_CLIENTS as u64, "edge sent {} responses", stats.responses);
        ensure!(wall < LOOPBACK_MAX_WALL, "took {wall:?}");
        Ok(format!(
            "{LOOPBACK_CLIENTS} clients, 0 drops, {at_edge} answered at edge, {forwarded} via cloud, {} ms",
            wall.as_millis()
        ))
    })
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("split ratio D", c1_split_ratio),
        ("transmission latency", c2_transmission),
        ("per-request transfer", c3_per_request_bytes),
        ("calibrated simulation", c4_calibrated_sim),
        ("LoRA accounting", c5_lora),
        ("protocol properties", c6_protocol),
        ("dedup oracle", c7_dedup),
        ("simulator properties", c8_simulator),
        ("netmgmt", c9_netmgmt),
        ("end-to-end loopback", c10_loopback),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        match outcome {
            Ok(detail) => println!("PASS {:>2} {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {why}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
