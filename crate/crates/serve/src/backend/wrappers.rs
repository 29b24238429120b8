use std::collections::BTreeMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use async_trait::async_trait;
use synergy_core::protocol::normalize_for_dedup;

use super::{Backend, BackendError, GenerationRequest, GenerationResult, ReplayEntry};

/// Counts calls into the wrapped backend.
pub struct CountingBackend {
    inner: Arc<dyn Backend>,
    single: AtomicU64,
    batch: AtomicU64,
}

impl CountingBackend {
    pub fn new(inner: Arc<dyn Backend>) -> Self {
        CountingBackend {
            inner,
            single: AtomicU64::new(0),
            batch: AtomicU64::new(0),
        }
    }

    pub fn generate_calls(&self) -> u64 {
        self.single.load(Ordering::SeqCst)
    }

    pub fn batch_calls(&self) -> u64 {
        self.batch.load(Ordering::SeqCst)
    }
}

#[async_trait]
impl Backend for CountingBackend {
    fn name(&self) -> &str {
        self.inner.name()
    }

    async fn generate(&self, req: &GenerationRequest) -> Result<GenerationResult, BackendError> {
        self.single.fetch_add(1, Ordering::SeqCst);
        self.inner.generate(req).await
    }

    async fn generate_batch(
        &self,
        reqs: &[GenerationRequest],
    ) -> Result<Vec<GenerationResult>, BackendError> {
        self.batch.fetch_add(1, Ordering::SeqCst);
        self.inner.generate_batch(reqs).await
    }
}

/// Records every successful generation so a run can be replayed later.
pub struct RecordingBackend {
    inner: Arc<dyn Backend>,
    log: Mutex<BTreeMap<String, ReplayEntry>>,
}

impl RecordingBackend {
    pub fn new(inner: Arc<dyn Backend>) -> Self {
        RecordingBackend {
            inner,
            log: Mutex::new(BTreeMap::new()),
        }
    }

    /// Recorded entries ordered by normalized prompt.
    pub fn entries(&self) -> Vec<ReplayEntry> {
        self.log.lock().expect("recording log poisoned").values().cloned().collect()
    }

    fn record(&self, req: &GenerationRequest, res: &GenerationResult) {
        let prompt = normalize_for_dedup(&req.prompt);
        self.log.lock().expect("recording log poisoned").insert(
            prompt.clone(),
            ReplayEntry {
                prompt,
                completion: res.text.clone(),
                confidence: res.confidence,
            },
        );
    }
}

#[async_trait]
impl Backend for RecordingBackend {
    fn name(&self) -> &str {
        self.inner.name()
    }

    async fn generate(&self, req: &GenerationRequest) -> Result<GenerationResult, BackendError> {
        let res = self.inner.generate(req).await?;
        self.record(req, &res);
        Ok(res)
    }

    async fn generate_batch(
        &self,
        reqs: &[GenerationRequest],
    ) -> Result<Vec<GenerationResult>, BackendError> {
        let out = self.inner.generate_batch(reqs).await?;
        for (req, res) in reqs.iter().zip(&out) {
            self.record(req, res);
        }
        Ok(out)
    }
}
