//! Cloud service: answers comprehensive-prompt batches with one responder
//! call per batch, and keeps the LoRA adapter registry.

use std::collections::BTreeMap;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use synergy_core::cost_model::{lora_adapter_params, CostError, LoraConfig, ModelShape};
use synergy_core::protocol::{Frame, PromptEnvelope, Stage};
use thiserror::Error;
use tokio::net::{TcpListener, TcpStream};
use tokio::task::JoinHandle;
use tracing::{debug, warn};

use crate::backend::{Backend, BackendKind, GenerationSettings};
use crate::metrics::{add, bump, CloudMetrics};
use crate::net::{write_frames, FrameReader};

/// The `[cloud]` config section.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CloudSettings {
    pub listen: String,
    pub backend: BackendKind,
    pub adapters_file: Option<PathBuf>,
}

/// Answers one batch. Output `i` answers input `i`. Envelopes that are not
/// valid comprehensive prompts, and every envelope of a batch whose
/// responder call fails, get error responses instead.
pub async fn respond_batch(
    batch: &[PromptEnvelope],
    responder: &dyn Backend,
    generation: &GenerationSettings,
) -> Vec<PromptEnvelope> {
    let mut out: Vec<Option<PromptEnvelope>> = vec![None; batch.len()];
    let mut todo = Vec::new();
    for (i, env) in batch.iter().enumerate() {
        if env.stage != Stage::Comprehensive {
            out[i] = Some(env.error_response(&format!("cloud accepts comprehensive prompts, got {}", env.stage)));
        } else if let Err(e) = env.validate() {
            out[i] = Some(env.error_response(&e.to_string()));
        } else {
            todo.push(i);
        }
    }
    if !todo.is_empty() {
        let reqs: Vec<_> = todo.iter().map(|&i| generation.request(batch[i].text.clone())).collect();
        match responder.generate_batch(&reqs).await {
            Ok(results) if results.len() == todo.len() => {
                for (&i, r) in todo.iter().zip(results) {
                    out[i] = Some(
                        batch[i]
                            .promote(Stage::Response, r.text)
                            .expect("comprehensive -> response is legal"),
                    );
                }
            }
            Ok(results) => {
                let msg = format!("responder returned {} results for {} prompts", results.len(), todo.len());
                for &i in &todo {
                    out[i] = Some(batch[i].error_response(&msg));
                }
            }
            Err(e) => {
                let msg = format!("responder failed: {e}");
                for &i in &todo {
                    out[i] = Some(batch[i].error_response(&msg));
                }
            }
        }
    }
    out.into_iter().map(|e| e.expect("every slot filled")).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdapterRecord {
    pub adapter_id: String,
    pub base_model: String,
    pub rank: u64,
    pub scale_factor: f64,
    pub size_bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AdapterError {
    #[error("adapter {0}: rank must be >= 1")]
    ZeroRank(String),
    #[error("adapter {0} is already registered")]
    Duplicate(String),
    #[error("adapter {id}: unknown base model {base}")]
    UnknownBase { id: String, base: String },
    #[error("adapter {id}: size {found} bytes is not within 1% of the expected {expected} bytes")]
    SizeMismatch { id: String, expected: u64, found: u64 },
    #[error("adapter {id}: {source}")]
    Cost { id: String, source: CostError },
    #[error("adapter file: {0}")]
    File(String),
}

const SIZE_TOLERANCE: f64 = 0.01;

#[derive(Debug, Clone, Default)]
pub struct AdapterRegistry {
    models: BTreeMap<String, ModelShape>,
    bytes_per_param: u8,
    adapters: BTreeMap<String, AdapterRecord>,
}

impl AdapterRegistry {
    /// Registry accepting adapters for `models`, stored at
    /// `bytes_per_param` bytes per adapter weight.
    pub fn new(models: impl IntoIterator<Item = ModelShape>, bytes_per_param: u8) -> Self {
        AdapterRegistry {
            models: models.into_iter().map(|m| (m.name.clone(), m)).collect(),
            bytes_per_param,
            adapters: BTreeMap::new(),
        }
    }

    pub fn expected_size(&self, base_model: &str, rank: u64) -> Option<Result<u64, CostError>> {
        let shape = self.models.get(base_model)?;
        let cfg = LoraConfig {
            rank,
            scale_factor: 1.0,
            adapter_bytes_per_param: self.bytes_per_param,
        };
        Some(lora_adapter_params(shape, &cfg).map(|p| p * u64::from(self.bytes_per_param)))
    }

    pub fn register(&mut self, rec: AdapterRecord) -> Result<(), AdapterError> {
        let id = rec.adapter_id.clone();
        if rec.rank == 0 {
            return Err(AdapterError::ZeroRank(id));
        }
        if self.adapters.contains_key(&id) {
            return Err(AdapterError::Duplicate(id));
        }
        let expected = match self.expected_size(&rec.base_model, rec.rank) {
            None => {
                return Err(AdapterError::UnknownBase {
                    id,
                    base: rec.base_model,
                })
            }
            Some(r) => r.map_err(|source| AdapterError::Cost { id: id.clone(), source })?,
        };
        if (rec.size_bytes as f64 - expected as f64).abs() > SIZE_TOLERANCE * expected as f64 {
            return Err(AdapterError::SizeMismatch {
                id,
                expected,
                found: rec.size_bytes,
            });
        }
        self.adapters.insert(id, rec);
        Ok(())
    }

    pub fn list(&self) -> impl Iterator<Item = &AdapterRecord> {
        self.adapters.values()
    }

    pub fn len(&self) -> usize {
        self.adapters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.adapters.is_empty()
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct AdapterFile {
    #[serde(default)]
    adapter: Vec<AdapterRecord>,
}

/// Parses a TOML document of `[[adapter]]` tables.
pub fn parse_adapters(text: &str) -> Result<Vec<AdapterRecord>, AdapterError> {
    toml::from_str::<AdapterFile>(text)
        .map(|f| f.adapter)
        .map_err(|e| AdapterError::File(e.message().to_string()))
}

pub fn load_adapters(path: &Path, registry: &mut AdapterRegistry) -> Result<usize, AdapterError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| AdapterError::File(format!("{}: {e}", path.display())))?;
    let records = parse_adapters(&text)?;
    let n = records.len();
    for r in records {
        registry.register(r)?;
    }
    Ok(n)
}

pub struct CloudService {
    responder: Arc<dyn Backend>,
    generation: GenerationSettings,
    adapters: Mutex<AdapterRegistry>,
    metrics: Arc<CloudMetrics>,
}

impl CloudService {
    pub fn new(responder: Arc<dyn Backend>, generation: GenerationSettings, adapters: AdapterRegistry) -> Arc<Self> {
        Arc::new(CloudService {
            responder,
            generation,
            adapters: Mutex::new(adapters),
            metrics: Arc::default(),
        })
    }

    pub fn metrics(&self) -> &Arc<CloudMetrics> {
        &self.metrics
    }

    pub fn register_adapter(&self, rec: AdapterRecord) -> Result<(), AdapterError> {
        self.adapters.lock().expect("registry poisoned").register(rec)
    }

    pub fn adapters(&self) -> Vec<AdapterRecord> {
        self.adapters.lock().expect("registry poisoned").list().cloned().collect()
    }

    async fn answer(&self, batch: &[PromptEnvelope]) -> Vec<PromptEnvelope> {
        bump(&self.metrics.batches);
        add(&self.metrics.prompts, batch.len() as u64);
        let out = respond_batch(batch, self.responder.as_ref(), &self.generation).await;
        add(&self.metrics.responses, out.len() as u64);
        add(&self.metrics.errors, out.iter().filter(|e| e.is_error()).count() as u64);
        out
    }

    /// Serves one edge connection. Batches on a connection are answered in
    /// arrival order; a bare envelope is a batch of one.
    pub async fn serve_connection(self: Arc<Self>, stream: TcpStream) {
        let (rd, mut wr) = stream.into_split();
        let mut reader = FrameReader::new(rd);
        let mut expected = 0usize;
        let mut batch = Vec::new();
        loop {
            let frame = match reader.next().await {
                Ok(Some(f)) => f,
                Ok(None) => break,
                Err(e) => {
                    warn!(error = %e, "dropping edge connection");
                    break;
                }
            };
            match frame {
                Frame::Batch { count } => {
                    if !batch.is_empty() {
                        warn!(got = batch.len(), expected, "batch cut short by a new header");
                        if !self.flush(&mut wr, &mut batch).await {
                            return;
                        }
                    }
                    expected = count as usize;
                }
                Frame::Envelope(env) => {
                    batch.push(env);
                    if batch.len() >= expected.max(1) {
                        expected = 0;
                        if !self.flush(&mut wr, &mut batch).await {
                            return;
                        }
                    }
                }
            }
        }
        if !batch.is_empty() {
            self.flush(&mut wr, &mut batch).await;
        }
    }

    async fn flush(&self, wr: &mut tokio::net::tcp::OwnedWriteHalf, batch: &mut Vec<PromptEnvelope>) -> bool {
        let out = self.answer(batch).await;
        batch.clear();
        let frames: Vec<Frame> = out.into_iter().map(Frame::Envelope).collect();
        match write_frames(wr, &frames).await {
            Ok(_) => true,
            Err(e) => {
                debug!(error = %e, "edge write failed");
                false
            }
        }
    }

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

pub struct RunningCloud {
    pub addr: SocketAddr,
    pub service: Arc<CloudService>,
    task: JoinHandle<()>,
}

impl RunningCloud {
    pub async fn start(listen: &str, service: Arc<CloudService>) -> std::io::Result<Self> {
        let listener = TcpListener::bind(listen).await?;
        let addr = listener.local_addr()?;
        let task = tokio::spawn(service.clone().run(listener));
        Ok(RunningCloud { addr, service, task })
    }

    pub fn shutdown(self) {
        self.task.abort();
    }
}
