use std::time::Instant;

use async_trait::async_trait;

use super::{Backend, BackendError, GenerationRequest, GenerationResult};

/// Returns the prompt unchanged with a fixed confidence.
#[derive(Debug, Clone)]
pub struct EchoBackend {
    confidence: f64,
}

impl EchoBackend {
    pub fn new(confidence: f64) -> Self {
        EchoBackend {
            confidence: confidence.clamp(0.0, 1.0),
        }
    }
}

#[async_trait]
impl Backend for EchoBackend {
    fn name(&self) -> &str {
        "echo"
    }

    async fn generate(&self, req: &GenerationRequest) -> Result<GenerationResult, BackendError> {
        req.validate()?;
        let start = Instant::now();
        Ok(GenerationResult {
            text: req.prompt.clone(),
            confidence: self.confidence,
            latency_s: start.elapsed().as_secs_f64(),
        })
    }
}
