mod common;

use std::collections::BTreeMap;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use synergy_core::protocol::{encode, PromptEnvelope, Stage};
use synergy_serve::backend::{Backend, MockBackend, MockSettings, RecordingBackend, ReplayBackend};
use synergy_serve::client::{send_prompts, ClientError, OutgoingPrompt};
use synergy_serve::corpus::concise_vocabulary;
use synergy_serve::metrics::parse_metrics;
use tokio::io::{AsyncReadExt, AsyncWriteExt};
use tokio::net::{TcpListener, TcpStream};

use common::{start_pipeline, start_pipeline_with};

fn mock() -> Arc<dyn Backend> {
    Arc::new(MockBackend::new(MockSettings::default()))
}

fn prompt(bs: &str, text: &str) -> OutgoingPrompt {
    OutgoingPrompt {
        bs_id: bs.into(),
        text: text.into(),
    }
}

const TIMEOUT: Duration = Duration::from_secs(10);

fn check_response(sent: &OutgoingPrompt, id: u64, got: &PromptEnvelope) {
    assert_eq!(got.request_id, id);
    assert_eq!(got.stage, Stage::Response);
    assert_eq!(got.origin_bs_id, sent.bs_id);
    assert!(!got.is_error(), "{}", got.text);
    assert!(got.text.contains(&sent.text), "{:?} lacks {:?}", got.text, sent.text);
    got.validate().unwrap();
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn three_prompts_three_responses() {
    let p = start_pipeline(mock(), mock()).await;
    let prompts = vec![
        prompt("bs-001", "best libraries"),
        prompt("bs-002", "quiet parks"),
        prompt("bs-003", "night markets"),
    ];
    let out = send_prompts(&p.edge_addr(), &prompts, TIMEOUT).await.unwrap();
    assert_eq!(out.len(), 3);
    for (i, (s, r)) in prompts.iter().zip(&out).enumerate() {
        check_response(s, i as u64 + 1, r);
    }
    p.shutdown();
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn hundred_concurrent_prompts() {
    let p = start_pipeline(mock(), mock()).await;
    let vocab = concise_vocabulary();
    let addr = p.edge_addr();
    let start = Instant::now();
    let clients: Vec<_> = (0..10)
        .map(|c| {
            let addr = addr.clone();
            let prompts: Vec<_> = (0..10)
                .map(|i| prompt(&format!("bs-00{}", 1 + (c + i) % 5), &format!("{} {c}-{i}", vocab[(c * 10 + i) % vocab.len()])))
                .collect();
            tokio::spawn(async move {
                let out = send_prompts(&addr, &prompts, TIMEOUT).await.unwrap();
                (prompts, out)
            })
        })
        .collect();
    let mut total = 0;
    for c in clients {
        let (sent, got) = c.await.unwrap();
        assert_eq!(got.len(), sent.len());
        for (i, (s, r)) in sent.iter().zip(&got).enumerate() {
            check_response(s, i as u64 + 1, r);
        }
        total += got.len();
    }
    let elapsed = start.elapsed();
    assert_eq!(total, 100);
    assert!(elapsed < Duration::from_secs(5), "{elapsed:?}");
    let m = p.edge.service.metrics().snapshot();
    assert_eq!(m.requests, 100);
    assert_eq!(m.responses, 100);
    assert_eq!(m.local_terminations + m.forwarded_prompts, 100);
    assert_eq!(p.cloud.service.metrics().snapshot().prompts, m.forwarded_prompts);
    p.shutdown();
}

async fn scrape(addr: std::net::SocketAddr) -> BTreeMap<String, u64> {
    let mut s = TcpStream::connect(addr).await.unwrap();
    s.write_all(b"GET /metrics HTTP/1.1\r\nHost: x\r\n\r\n").await.unwrap();
    let mut body = String::new();
    s.read_to_string(&mut body).await.unwrap();
    assert!(body.starts_with("HTTP/1.1 200 OK"));
    let text = body.split_once("\r\n\r\n").unwrap().1;
    parse_metrics(text).into_iter().collect()
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn duplicates_show_in_metrics() {
    let p = start_pipeline(mock(), mock()).await;
    let prompts = vec![
        prompt("bs-001", "best libraries"),
        prompt("bs-001", "Best  Libraries"),
        prompt("bs-002", "best libraries?"),
        prompt("bs-001", "quiet parks"),
    ];
    let out = send_prompts(&p.edge_addr(), &prompts, TIMEOUT).await.unwrap();
    assert_eq!(out.len(), 4);
    // duplicates carry the leader's answer
    assert_eq!(out[0].text, out[1].text);
    assert_eq!(out[0].text, out[2].text);
    assert!(out[1].terminated_at_edge && out[2].terminated_at_edge);
    let m = scrape(p.edge.metrics_addr.unwrap()).await;
    assert_eq!(m["dedup_hits"], 2);
    assert_eq!(m["requests"], 4);
    p.shutdown();
}

/// Many clients, overlapping prompts, arbitrary interleaving: one response
/// per request, never more.
#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn exactly_one_response_under_duplicates() {
    let p = start_pipeline(mock(), mock()).await;
    let vocab = concise_vocabulary();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut batches = Vec::new();
    for _ in 0..8 {
        let prompts: Vec<_> = (0..250)
            .map(|_| {
                let base = vocab[rng.gen_range(0..vocab.len())];
                let text = if rng.gen_bool(0.3) {
                    base.to_uppercase()
                } else {
                    format!("{base} {}", rng.gen_range(0..400))
                };
                prompt(&format!("bs-00{}", rng.gen_range(1..=6)), &text)
            })
            .collect();
        batches.push(prompts);
    }
    let addr = p.edge_addr();
    let tasks: Vec<_> = batches
        .into_iter()
        .map(|prompts| {
            let addr = addr.clone();
            tokio::spawn(async move { (send_prompts(&addr, &prompts, TIMEOUT).await.unwrap(), prompts) })
        })
        .collect();
    let mut total = 0;
    for t in tasks {
        let (out, sent) = t.await.unwrap();
        assert_eq!(out.len(), sent.len());
        for (i, (s, r)) in sent.iter().zip(&out).enumerate() {
            assert_eq!(r.request_id, i as u64 + 1);
            assert_eq!(r.stage, Stage::Response);
            assert!(!r.is_error(), "{}", r.text);
            assert!(r.text.to_lowercase().contains(&s.text.to_lowercase()));
        }
        total += out.len();
    }
    assert_eq!(total, 2000);
    let m = p.edge.service.metrics().snapshot();
    assert_eq!(m.responses, 2000);
    assert!(m.dedup_hits > 0);
    // bs-006 has no profile
    assert!(m.unknown_bs > 0);
    p.shutdown();
}

async fn run_corpus(completer: Arc<dyn Backend>, responder: Arc<dyn Backend>) -> Vec<(String, bool)> {
    let p = start_pipeline(completer, responder).await;
    let prompts: Vec<_> = concise_vocabulary()
        .into_iter()
        .enumerate()
        .map(|(i, t)| prompt(&format!("bs-00{}", 1 + i % 5), t))
        .collect();
    let out = send_prompts(&p.edge_addr(), &prompts, TIMEOUT).await.unwrap();
    p.shutdown();
    out.into_iter().map(|e| (e.text, e.terminated_at_edge)).collect()
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn replay_substitutes_for_mock() {
    let completer = Arc::new(RecordingBackend::new(mock()));
    let responder = Arc::new(RecordingBackend::new(mock()));
    let live = run_corpus(completer.clone(), responder.clone()).await;
    assert!(live.iter().any(|(_, local)| *local));
    assert!(live.iter().any(|(_, local)| !*local));
    let replayed = run_corpus(
        Arc::new(ReplayBackend::from_entries(completer.entries())),
        Arc::new(ReplayBackend::from_entries(responder.entries())),
    )
    .await;
    assert_eq!(live, replayed);
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn dead_cloud_still_answers_every_request() {
    let dead = TcpListener::bind("127.0.0.1:0").await.unwrap().local_addr().unwrap().to_string();
    let p = start_pipeline_with(mock(), mock(), |s| s.cloud_addr = dead.clone()).await;
    let prompts: Vec<_> = concise_vocabulary().into_iter().map(|t| prompt("bs-001", t)).collect();
    let out = send_prompts(&p.edge_addr(), &prompts, TIMEOUT).await.unwrap();
    assert_eq!(out.len(), prompts.len());
    assert!(out.iter().all(|e| e.stage == Stage::Response));
    assert!(out.iter().any(|e| e.is_error()));
    p.shutdown();
}

#[tokio::test]
async fn dead_edge_is_a_connect_error() {
    let dead = TcpListener::bind("127.0.0.1:0").await.unwrap().local_addr().unwrap().to_string();
    let err = send_prompts(&dead, &[prompt("bs-001", "x")], TIMEOUT).await.unwrap_err();
    assert!(matches!(err, ClientError::Connect { .. }));
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn non_concise_input_gets_an_error_response() {
    let p = start_pipeline(mock(), mock()).await;
    let mut s = TcpStream::connect(p.edge.addr).await.unwrap();
    let env = PromptEnvelope::concise(5, "q", "bs-001", 1)
        .promote(Stage::Comprehensive, "already long")
        .unwrap();
    s.write_all(&encode(&env).unwrap()).await.unwrap();
    let mut buf = vec![0u8; 4096];
    let mut got = Vec::new();
    let resp = loop {
        let n = s.read(&mut buf).await.unwrap();
        assert!(n > 0);
        got.extend_from_slice(&buf[..n]);
        if let Ok((e, _)) = synergy_core::protocol::decode(&got) {
            break e;
        }
    };
    assert_eq!(resp.request_id, 5);
    assert!(resp.is_error());
    p.shutdown();
}
