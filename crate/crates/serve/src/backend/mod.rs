//! Text-generation backends.
//!
//! Every backend takes a [`GenerationRequest`] and returns a
//! [`GenerationResult`]; the edge uses one as its completer and the cloud
//! uses one as its responder.

use std::path::Path;
use std::sync::Arc;

use async_trait::async_trait;
use serde::Deserialize;
use thiserror::Error;

mod echo;
mod http;
mod mock;
mod prompt;
mod replay;
mod wrappers;

pub use echo::EchoBackend;
pub use http::{HttpBackend, HttpSettings};
pub use mock::{MockBackend, MockSettings};
pub use prompt::{intent_prompt, EnhancementPrompt, INTENT_HEADER};
pub use replay::{
    parse_replay_corpus, render_replay_corpus, ReplayBackend, ReplayEntry, ReplayError, ReplaySettings,
};
pub use wrappers::{CountingBackend, RecordingBackend};

#[derive(Debug, Clone, PartialEq)]
pub struct GenerationRequest {
    pub prompt: String,
    pub max_new_tokens: u32,
    /// 0 means deterministic.
    pub temperature: f64,
}

impl GenerationRequest {
    pub fn new(prompt: impl Into<String>, max_new_tokens: u32, temperature: f64) -> Self {
        GenerationRequest {
            prompt: prompt.into(),
            max_new_tokens,
            temperature,
        }
    }

    pub fn validate(&self) -> Result<(), BackendError> {
        if self.prompt.is_empty() {
            return Err(BackendError::InvalidRequest("empty prompt".into()));
        }
        if self.max_new_tokens == 0 {
            return Err(BackendError::InvalidRequest("max_new_tokens must be >= 1".into()));
        }
        if !(self.temperature >= 0.0 && self.temperature.is_finite()) {
            return Err(BackendError::InvalidRequest(format!(
                "temperature {} must be finite and >= 0",
                self.temperature
            )));
        }
        Ok(())
    }
}

/// The `[generation]` config section: parameters the services put on
/// every request.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenerationSettings {
    pub max_new_tokens: u32,
    pub temperature: f64,
}

impl Default for GenerationSettings {
    fn default() -> Self {
        GenerationSettings {
            max_new_tokens: 128,
            temperature: 0.0,
        }
    }
}

impl GenerationSettings {
    pub fn request(&self, prompt: impl Into<String>) -> GenerationRequest {
        GenerationRequest::new(prompt, self.max_new_tokens, self.temperature)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenerationResult {
    pub text: String,
    /// In `[0, 1]`.
    pub confidence: f64,
    pub latency_s: f64,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BackendError {
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("no replay entry for prompt {0:?}")]
    NotFound(String),
    #[error("transport error: {0}")]
    Transport(String),
    #[error("timed out after {0} s")]
    Timeout(f64),
    #[error("unusable response: {0}")]
    BadResponse(String),
}

#[async_trait]
pub trait Backend: Send + Sync {
    fn name(&self) -> &str;

    async fn generate(&self, req: &GenerationRequest) -> Result<GenerationResult, BackendError>;

    /// One call for a whole batch. The default runs the requests in order
    /// and fails the batch on the first error.
    async fn generate_batch(
        &self,
        reqs: &[GenerationRequest],
    ) -> Result<Vec<GenerationResult>, BackendError> {
        let mut out = Vec::with_capacity(reqs.len());
        for req in reqs {
            out.push(self.generate(req).await?);
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    Mock,
    Echo,
    Replay,
    Http,
}

impl std::str::FromStr for BackendKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "mock" => Ok(BackendKind::Mock),
            "echo" => Ok(BackendKind::Echo),
            "replay" => Ok(BackendKind::Replay),
            "http" => Ok(BackendKind::Http),
            other => Err(format!("unknown backend {other:?}; expected mock, echo, replay or http")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EchoSettings {
    #[serde(default)]
    pub confidence: f64,
}

impl Default for EchoSettings {
    fn default() -> Self {
        EchoSettings { confidence: 0.0 }
    }
}

/// The `[backend]` config section.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BackendSection {
    #[serde(default)]
    pub mock: MockSettings,
    #[serde(default)]
    pub echo: EchoSettings,
    pub replay: Option<ReplaySettings>,
    pub http: Option<HttpSettings>,
}

#[derive(Debug, Error)]
pub enum BuildError {
    #[error("backend.{0} section is required for the {0} backend")]
    MissingSection(&'static str),
    #[error(transparent)]
    Replay(#[from] ReplayError),
    #[error("backend.http: {0}")]
    Http(String),
}

/// Builds the configured backend. Relative replay paths resolve against
/// `base_dir`.
pub fn build_backend(
    kind: BackendKind,
    section: &BackendSection,
    base_dir: &Path,
) -> Result<Arc<dyn Backend>, BuildError> {
    Ok(match kind {
        BackendKind::Mock => Arc::new(MockBackend::new(section.mock.clone())),
        BackendKind::Echo => Arc::new(EchoBackend::new(section.echo.confidence)),
        BackendKind::Replay => {
            let s = section.replay.as_ref().ok_or(BuildError::MissingSection("replay"))?;
            Arc::new(ReplayBackend::load(&base_dir.join(&s.path))?)
        }
        BackendKind::Http => {
            let s = section.http.as_ref().ok_or(BuildError::MissingSection("http"))?;
            Arc::new(HttpBackend::new(s.clone()).map_err(|e| BuildError::Http(e.to_string()))?)
        }
    })
}

/// Keeps the first `max_new_tokens` whitespace-separated tokens, with the
/// original spacing between them.
pub(crate) fn truncate_tokens(text: &str, max_new_tokens: u32) -> String {
    let mut seen = 0u32;
    let mut in_token = false;
    for (i, c) in text.char_indices() {
        if c.is_whitespace() {
            if in_token && seen == max_new_tokens {
                return text[..i].to_string();
            }
            in_token = false;
        } else if !in_token {
            in_token = true;
            seen += 1;
        }
    }
    text.to_string()
}
