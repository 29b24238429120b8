//! Client for a completion-style HTTP server (prompt in, JSON text out).

use std::time::{Duration, Instant};

use async_trait::async_trait;
use serde::Deserialize;
use serde_json::Value;
use tokio::sync::Semaphore;

use super::{Backend, BackendError, GenerationRequest, GenerationResult};

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HttpSettings {
    /// Full URL the request body is POSTed to.
    pub endpoint: String,
    /// JSON body with `{prompt}`, `{max_new_tokens}` and `{temperature}`
    /// placeholders, each replaced by a JSON value.
    pub request_template: String,
    /// JSON pointer to the generated text in the response body.
    pub response_pointer: String,
    /// JSON pointer to a confidence number; confidence is 0 without one.
    #[serde(default)]
    pub confidence_pointer: Option<String>,
    pub timeout_s: f64,
    pub max_in_flight: usize,
}

#[derive(Debug)]
pub struct HttpBackend {
    settings: HttpSettings,
    client: reqwest::Client,
    slots: Semaphore,
}

impl HttpBackend {
    pub fn new(settings: HttpSettings) -> Result<Self, BackendError> {
        if !(settings.timeout_s > 0.0 && settings.timeout_s.is_finite()) {
            return Err(BackendError::InvalidRequest("timeout_s must be positive".into()));
        }
        if settings.max_in_flight == 0 {
            return Err(BackendError::InvalidRequest("max_in_flight must be >= 1".into()));
        }
        render_body(&settings.request_template, &GenerationRequest::new("probe", 1, 0.0))?;
        let client = reqwest::Client::builder()
            .timeout(Duration::from_secs_f64(settings.timeout_s))
            .build()
            .map_err(|e| BackendError::Transport(e.to_string()))?;
        Ok(HttpBackend {
            slots: Semaphore::new(settings.max_in_flight),
            settings,
            client,
        })
    }
}

fn render_body(template: &str, req: &GenerationRequest) -> Result<Value, BackendError> {
    let values = [
        ("{prompt}", Value::from(req.prompt.as_str())),
        ("{max_new_tokens}", Value::from(req.max_new_tokens)),
        ("{temperature}", Value::from(req.temperature)),
    ];
    // single pass, so placeholder text inside the prompt stays literal
    let mut body = String::with_capacity(template.len() + req.prompt.len());
    let mut rest = template;
    while let Some(open) = rest.find('{') {
        body.push_str(&rest[..open]);
        rest = &rest[open..];
        match values.iter().find(|(name, _)| rest.starts_with(name)) {
            Some((name, value)) => {
                body.push_str(&value.to_string());
                rest = &rest[name.len()..];
            }
            None => {
                body.push('{');
                rest = &rest[1..];
            }
        }
    }
    body.push_str(rest);
    serde_json::from_str(&body)
        .map_err(|e| BackendError::InvalidRequest(format!("request_template is not JSON after substitution: {e}")))
}

fn extract(body: &Value, settings: &HttpSettings) -> Result<(String, f64), BackendError> {
    let text = body
        .pointer(&settings.response_pointer)
        .and_then(Value::as_str)
        .ok_or_else(|| {
            BackendError::BadResponse(format!("no string at {}", settings.response_pointer))
        })?;
    let confidence = match &settings.confidence_pointer {
        None => 0.0,
        Some(p) => body
            .pointer(p)
            .and_then(Value::as_f64)
            .ok_or_else(|| BackendError::BadResponse(format!("no number at {p}")))?
            .clamp(0.0, 1.0),
    };
    Ok((text.to_string(), confidence))
}

#[async_trait]
impl Backend for HttpBackend {
    fn name(&self) -> &str {
        "http"
    }

    async fn generate(&self, req: &GenerationRequest) -> Result<GenerationResult, BackendError> {
        req.validate()?;
        let body = render_body(&self.settings.request_template, req)?;
        let _slot = self
            .slots
            .acquire()
            .await
            .map_err(|_| BackendError::Transport("backend closed".into()))?;
        let start = Instant::now();
        let map_err = |e: reqwest::Error| {
            if e.is_timeout() {
                BackendError::Timeout(self.settings.timeout_s)
            } else {
                BackendError::Transport(e.to_string())
            }
        };
        let resp = self
            .client
            .post(&self.settings.endpoint)
            .json(&body)
            .send()
            .await
            .map_err(map_err)?;
        let status = resp.status();
        if !status.is_success() {
            return Err(BackendError::Transport(format!("server answered {status}")));
        }
        let value: Value = resp
            .json()
            .await
            .map_err(|e| BackendError::BadResponse(e.to_string()))?;
        let (text, confidence) = extract(&value, &self.settings)?;
        Ok(GenerationResult {
            text,
            confidence,
            latency_s: start.elapsed().as_secs_f64(),
        })
    }
}
