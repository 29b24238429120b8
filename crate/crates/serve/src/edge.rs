//! Edge service: de-duplicates concise prompts, enhances them with the
//! base station's location profile, answers locally when the completer is
//! confident enough and batches the rest to the cloud.

use std::collections::HashMap;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use serde::Deserialize;
use synergy_core::protocol::{EnvelopeError, Frame, PromptEnvelope, Stage};
use tokio::net::tcp::OwnedWriteHalf;
use tokio::net::{TcpListener, TcpStream};
use tokio::sync::{mpsc, oneshot};
use tokio::task::JoinHandle;
use tracing::{debug, warn};

use crate::backend::{Backend, BackendKind, EnhancementPrompt, GenerationSettings};
use crate::batcher::spawn_batcher;
use crate::dedup::{DedupCache, Lookup};
use crate::metrics::{add, bump, serve_metrics, EdgeMetrics};
use crate::net::{write_frames, FrameReader};
use crate::profile::{LocationProfile, ProfileStore};

/// The `[edge]` config section.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeSettings {
    pub listen: String,
    pub metrics_listen: Option<String>,
    pub cloud_addr: String,
    pub profiles_dir: PathBuf,
    pub backend: BackendKind,
    pub dedup_ttl_s: f64,
    pub dedup_capacity: usize,
    pub batch_window_s: f64,
    pub max_batch: usize,
    /// Answer at the edge when completer confidence reaches this value.
    pub termination_threshold: f64,
    pub request_timeout_s: f64,
}

impl EdgeSettings {
    pub fn validate(&self) -> Result<(), String> {
        let positive = |v: f64| v > 0.0 && v.is_finite();
        if !positive(self.dedup_ttl_s) {
            return Err("edge.dedup_ttl_s must be positive".into());
        }
        if self.dedup_capacity == 0 {
            return Err("edge.dedup_capacity must be >= 1".into());
        }
        if !(self.batch_window_s >= 0.0 && self.batch_window_s.is_finite()) {
            return Err("edge.batch_window_s must be >= 0".into());
        }
        if self.max_batch == 0 || self.max_batch > synergy_core::protocol::MAX_BATCH as usize {
            return Err(format!(
                "edge.max_batch must be in 1..={}",
                synergy_core::protocol::MAX_BATCH
            ));
        }
        if self.termination_threshold.is_nan() {
            return Err("edge.termination_threshold must be a number".into());
        }
        if !positive(self.request_timeout_s) {
            return Err("edge.request_timeout_s must be positive".into());
        }
        Ok(())
    }
}

/// Rewrites a concise envelope into a comprehensive one.
///
/// The completer sees an [`EnhancementPrompt`] holding the facts
/// `profile` selects for the text. With no facts, or when the completer
/// fails, the concise text is promoted unchanged. A completion that drops
/// the concise text gets it prepended.
pub async fn enhance(
    env: &PromptEnvelope,
    profile: &LocationProfile,
    completer: &dyn Backend,
    generation: &GenerationSettings,
) -> Result<PromptEnvelope, EnvelopeError> {
    enhance_reporting(env, profile, completer, generation)
        .await
        .map(|(out, _)| out)
}

/// [`enhance`], also reporting whether the completer failed.
async fn enhance_reporting(
    env: &PromptEnvelope,
    profile: &LocationProfile,
    completer: &dyn Backend,
    generation: &GenerationSettings,
) -> Result<(PromptEnvelope, bool), EnvelopeError> {
    if env.stage != Stage::Concise {
        return Err(EnvelopeError::IllegalTransition {
            from: env.stage,
            to: Stage::Comprehensive,
        });
    }
    let facts = profile.select_facts(&env.text);
    if facts.is_empty() {
        return Ok((env.promote(Stage::Comprehensive, env.text.clone())?, false));
    }
    let prompt = EnhancementPrompt {
        region: profile.region_name.clone(),
        facts: facts.iter().map(|f| f.to_string()).collect(),
        request: env.text.clone(),
    };
    let (text, degraded) = match completer.generate(&generation.request(prompt.render())).await {
        Ok(r) if r.text.contains(&env.text) => (r.text, false),
        Ok(r) if !r.text.trim().is_empty() => (format!("{} {}", env.text, r.text), false),
        Ok(_) => (env.text.clone(), false),
        Err(e) => {
            warn!(request_id = env.request_id, error = %e, "completer failed; forwarding concise text");
            (env.text.clone(), true)
        }
    };
    Ok((env.promote(Stage::Comprehensive, text)?, degraded))
}

/// The edge-termination rule.
pub fn decide(confidence: f64, threshold: f64) -> bool {
    confidence >= threshold
}

#[derive(Debug, Clone, PartialEq)]
pub enum Termination {
    RespondLocally(PromptEnvelope),
    Forward,
}

/// Asks the completer to answer the comprehensive prompt and keeps the
/// answer when [`decide`] accepts its confidence.
pub async fn maybe_terminate(
    env: &PromptEnvelope,
    completer: &dyn Backend,
    generation: &GenerationSettings,
    threshold: f64,
) -> Termination {
    if env.stage != Stage::Comprehensive {
        return Termination::Forward;
    }
    match completer.generate(&generation.request(env.text.clone())).await {
        Ok(r) if decide(r.confidence, threshold) && !r.text.is_empty() => {
            match env.promote(Stage::Response, r.text) {
                Ok(mut resp) => {
                    resp.terminated_at_edge = true;
                    Termination::RespondLocally(resp)
                }
                Err(_) => Termination::Forward,
            }
        }
        Ok(_) => Termination::Forward,
        Err(e) => {
            debug!(request_id = env.request_id, error = %e, "no local answer");
            Termination::Forward
        }
    }
}

type Reply = mpsc::UnboundedSender<PromptEnvelope>;
type Outcome = Result<(String, bool), String>;

struct Waiter {
    concise: PromptEnvelope,
    reply: Reply,
    leader: bool,
}

struct DedupState {
    cache: DedupCache,
    waiters: HashMap<u64, Vec<Waiter>>,
}

struct Forward {
    env: PromptEnvelope,
    reply: oneshot::Sender<Result<String, String>>,
}

pub struct EdgeService {
    settings: EdgeSettings,
    generation: GenerationSettings,
    profiles: ProfileStore,
    completer: Arc<dyn Backend>,
    state: Mutex<DedupState>,
    metrics: Arc<EdgeMetrics>,
    started: Instant,
    tickets: AtomicU64,
    forward: mpsc::UnboundedSender<Forward>,
}

impl EdgeService {
    /// Builds the service and starts its cloud uplink task. Must be called
    /// inside a Tokio runtime.
    ///
    /// # Panics
    /// If `settings` fails [`EdgeSettings::validate`].
    pub fn new(
        settings: EdgeSettings,
        generation: GenerationSettings,
        profiles: ProfileStore,
        completer: Arc<dyn Backend>,
    ) -> Arc<Self> {
        if let Err(e) = settings.validate() {
            panic!("invalid edge settings: {e}");
        }
        let metrics = Arc::new(EdgeMetrics::default());
        let (forward, batches) =
            spawn_batcher(Duration::from_secs_f64(settings.batch_window_s), settings.max_batch);
        tokio::spawn(uplink(settings.cloud_addr.clone(), batches, metrics.clone()));
        Arc::new(EdgeService {
            state: Mutex::new(DedupState {
                cache: DedupCache::new(settings.dedup_ttl_s, settings.dedup_capacity),
                waiters: HashMap::new(),
            }),
            settings,
            generation,
            profiles,
            completer,
            metrics,
            started: Instant::now(),
            tickets: AtomicU64::new(0),
            forward,
        })
    }

    pub fn metrics(&self) -> &Arc<EdgeMetrics> {
        &self.metrics
    }

    fn send(&self, reply: &Reply, env: PromptEnvelope) {
        if env.is_error() {
            bump(&self.metrics.errors);
        }
        bump(&self.metrics.responses);
        // a closed connection only loses its own answers
        let _ = reply.send(env);
    }

    /// Produces exactly one Response on `reply` for `env`.
    pub async fn handle(self: Arc<Self>, env: PromptEnvelope, reply: Reply) {
        bump(&self.metrics.requests);
        if env.stage != Stage::Concise {
            let msg = format!("edge accepts concise prompts, got {}", env.stage);
            self.send(&reply, env.error_response(&msg));
            return;
        }
        if let Err(e) = env.validate() {
            self.send(&reply, env.error_response(&e.to_string()));
            return;
        }
        let ticket = self.tickets.fetch_add(1, Ordering::SeqCst);
        let now = self.started.elapsed().as_secs_f64();
        {
            let mut st = self.state.lock().expect("dedup state poisoned");
            match st.cache.lookup(env.dedup_key, ticket, now) {
                Lookup::Cached(text) => {
                    drop(st);
                    bump(&self.metrics.dedup_hits);
                    self.send(&reply, respond(&env, text, true));
                    return;
                }
                Lookup::DuplicateOf(leader) => {
                    bump(&self.metrics.dedup_hits);
                    st.waiters.entry(leader).or_default().push(Waiter {
                        concise: env,
                        reply,
                        leader: false,
                    });
                    return;
                }
                Lookup::Fresh => {
                    st.waiters.insert(
                        ticket,
                        vec![Waiter {
                            concise: env.clone(),
                            reply,
                            leader: true,
                        }],
                    );
                }
            }
        }
        let outcome = self.process(&env).await;
        let waiters = {
            let mut st = self.state.lock().expect("dedup state poisoned");
            match &outcome {
                Ok((text, _)) => st.cache.complete(env.dedup_key, ticket, text.clone()),
                Err(_) => st.cache.abandon(env.dedup_key, ticket),
            }
            st.waiters.remove(&ticket).unwrap_or_default()
        };
        for w in waiters {
            let resp = match &outcome {
                Ok((text, local)) => respond(&w.concise, text.clone(), *local || !w.leader),
                Err(msg) => {
                    let mut e = w.concise.error_response(msg);
                    e.terminated_at_edge = true;
                    e
                }
            };
            self.send(&w.reply, resp);
        }
    }

    async fn process(&self, env: &PromptEnvelope) -> Outcome {
        let profile = match self.profiles.get(&env.origin_bs_id) {
            Some(p) => p.clone(),
            None => {
                bump(&self.metrics.unknown_bs);
                warn!(bs_id = %env.origin_bs_id, "no location profile; enhancing without facts");
                LocationProfile::fallback(&env.origin_bs_id)
            }
        };
        let (comprehensive, degraded) =
            enhance_reporting(env, &profile, self.completer.as_ref(), &self.generation)
                .await
                .map_err(|e| e.to_string())?;
        if degraded {
            bump(&self.metrics.degraded_enhancements);
        }
        match maybe_terminate(
            &comprehensive,
            self.completer.as_ref(),
            &self.generation,
            self.settings.termination_threshold,
        )
        .await
        {
            Termination::RespondLocally(resp) => {
                bump(&self.metrics.local_terminations);
                Ok((resp.text, true))
            }
            Termination::Forward => {
                let (tx, rx) = oneshot::channel();
                self.forward
                    .send(Forward {
                        env: comprehensive,
                        reply: tx,
                    })
                    .map_err(|_| "edge uplink stopped".to_string())?;
                let limit = Duration::from_secs_f64(self.settings.request_timeout_s);
                match tokio::time::timeout(limit, rx).await {
                    Ok(Ok(r)) => r.map(|text| (text, false)),
                    Ok(Err(_)) => Err("edge uplink dropped the request".into()),
                    Err(_) => Err(format!(
                        "no cloud response within {} s",
                        self.settings.request_timeout_s
                    )),
                }
            }
        }
    }

    /// Serves one client connection until it closes.
    pub async fn serve_connection(self: Arc<Self>, stream: TcpStream) {
        let peer = stream.peer_addr().ok();
        let (rd, mut wr) = stream.into_split();
        let (tx, mut rx) = mpsc::unbounded_channel::<PromptEnvelope>();
        let writer = tokio::spawn(async move {
            while let Some(env) = rx.recv().await {
                if let Err(e) = write_frames(&mut wr, &[Frame::Envelope(env)]).await {
                    debug!(error = %e, "client write failed");
                    break;
                }
            }
        });
        let mut reader = FrameReader::new(rd);
        loop {
            match reader.next().await {
                Ok(Some(Frame::Envelope(env))) => {
                    tokio::spawn(self.clone().handle(env, tx.clone()));
                }
                Ok(Some(Frame::Batch { .. })) => {}
                Ok(None) => break,
                Err(e) => {
                    warn!(?peer, error = %e, "dropping client connection");
                    break;
                }
            }
        }
        drop(tx);
        let _ = writer.await;
    }

    /// Accepts client connections until the listener fails.
    pub async fn run(self: Arc<Self>, listener: TcpListener) {
        loop {
            match listener.accept().await {
                Ok((stream, _)) => {
                    let _ = stream.set_nodelay(true);
                    tokio::spawn(self.clone().serve_connection(stream));
                }
                Err(e) => {
                    warn!(error = %e, "accept failed");
                    tokio::time::sleep(Duration::from_millis(50)).await;
                }
            }
        }
    }
}

fn respond(concise: &PromptEnvelope, text: String, terminated_at_edge: bool) -> PromptEnvelope {
    let mut resp = concise
        .promote(Stage::Response, text)
        .expect("concise -> response is legal");
    resp.terminated_at_edge = terminated_at_edge;
    resp
}

type PendingMap = Arc<Mutex<HashMap<u64, oneshot::Sender<Result<String, String>>>>>;

struct Uplink {
    writer: OwnedWriteHalf,
    alive: Arc<AtomicBool>,
    pending: PendingMap,
}

async fn connect_uplink(addr: &str) -> std::io::Result<Uplink> {
    let stream = tokio::time::timeout(Duration::from_secs(5), TcpStream::connect(addr))
        .await
        .map_err(|_| std::io::Error::new(std::io::ErrorKind::TimedOut, "connect timed out"))??;
    let _ = stream.set_nodelay(true);
    let (rd, writer) = stream.into_split();
    let alive = Arc::new(AtomicBool::new(true));
    let pending: PendingMap = Arc::default();
    let (alive2, pending2) = (alive.clone(), pending.clone());
    tokio::spawn(async move {
        let mut reader = FrameReader::new(rd);
        let reason = loop {
            match reader.next().await {
                Ok(Some(Frame::Envelope(env))) => {
                    let waiter = pending2.lock().expect("uplink map poisoned").remove(&env.request_id);
                    match waiter {
                        Some(w) if env.stage == Stage::Response && !env.is_error() => {
                            let _ = w.send(Ok(env.text));
                        }
                        Some(w) => {
                            let _ = w.send(Err(cloud_error(&env)));
                        }
                        None => warn!(request_id = env.request_id, "unexpected cloud response"),
                    }
                }
                Ok(Some(Frame::Batch { .. })) => {}
                Ok(None) => break "cloud closed the connection".to_string(),
                Err(e) => break format!("cloud connection failed: {e}"),
            }
        };
        alive2.store(false, Ordering::SeqCst);
        for (_, w) in pending2.lock().expect("uplink map poisoned").drain() {
            let _ = w.send(Err(reason.clone()));
        }
    });
    Ok(Uplink {
        writer,
        alive,
        pending,
    })
}

fn cloud_error(env: &PromptEnvelope) -> String {
    let text = env
        .text
        .strip_prefix(synergy_core::protocol::ERROR_PREFIX)
        .unwrap_or(&env.text);
    format!("cloud: {text}")
}

/// Sends batches over one persistent cloud connection, reconnecting after a
/// failure. Upstream request ids are assigned here, so ids from different
/// clients never clash.
async fn uplink(addr: String, mut batches: mpsc::Receiver<Vec<Forward>>, metrics: Arc<EdgeMetrics>) {
    let mut conn: Option<Uplink> = None;
    let mut next_id: u64 = 1;
    while let Some(batch) = batches.recv().await {
        if !conn.as_ref().is_some_and(|c| c.alive.load(Ordering::SeqCst)) {
            conn = match connect_uplink(&addr).await {
                Ok(c) => Some(c),
                Err(e) => {
                    for f in batch {
                        let _ = f.reply.send(Err(format!("cloud unreachable at {addr}: {e}")));
                    }
                    continue;
                }
            };
        }
        let c = conn.as_mut().expect("connected above");
        let mut frames = vec![Frame::Batch {
            count: batch.len() as u32,
        }];
        let mut ids = Vec::with_capacity(batch.len());
        {
            let mut pending = c.pending.lock().expect("uplink map poisoned");
            for f in batch {
                let mut env = f.env;
                env.request_id = next_id;
                ids.push(next_id);
                next_id += 1;
                pending.insert(env.request_id, f.reply);
                frames.push(Frame::Envelope(env));
            }
        }
        match write_frames(&mut c.writer, &frames).await {
            Ok(bytes) => {
                bump(&metrics.forwarded_batches);
                add(&metrics.forwarded_prompts, ids.len() as u64);
                add(&metrics.upstream_bytes, bytes as u64);
            }
            Err(e) => {
                let mut pending = c.pending.lock().expect("uplink map poisoned");
                for id in ids {
                    if let Some(w) = pending.remove(&id) {
                        let _ = w.send(Err(format!("cloud write failed: {e}")));
                    }
                }
                c.alive.store(false, Ordering::SeqCst);
            }
        }
    }
}

/// A started edge service and the addresses it listens on.
pub struct RunningEdge {
    pub addr: SocketAddr,
    pub metrics_addr: Option<SocketAddr>,
    pub service: Arc<EdgeService>,
    tasks: Vec<JoinHandle<()>>,
}

impl RunningEdge {
    /// Binds the configured addresses and starts serving.
    pub async fn start(
        settings: EdgeSettings,
        generation: GenerationSettings,
        profiles: ProfileStore,
        completer: Arc<dyn Backend>,
    ) -> std::io::Result<Self> {
        let listener = TcpListener::bind(&settings.listen).await?;
        let metrics_listener = match &settings.metrics_listen {
            Some(a) => Some(TcpListener::bind(a).await?),
            None => None,
        };
        let addr = listener.local_addr()?;
        let metrics_addr = metrics_listener.as_ref().map(|l| l.local_addr()).transpose()?;
        let service = EdgeService::new(settings, generation, profiles, completer);
        let mut tasks = vec![tokio::spawn(service.clone().run(listener))];
        if let Some(l) = metrics_listener {
            let m = service.metrics().clone();
            tasks.push(tokio::spawn(serve_metrics(l, Arc::new(move || m.render()))));
        }
        Ok(RunningEdge {
            addr,
            metrics_addr,
            service,
            tasks,
        })
    }

    pub fn shutdown(self) {
        for t in self.tasks {
            t.abort();
        }
    }
}
