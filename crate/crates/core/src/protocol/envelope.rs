use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use super::normalize::dedup_key;

/// Where a prompt is in its lifecycle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Stage {
    Concise,
    Comprehensive,
    Response,
}

impl Stage {
    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Concise => "concise",
            Stage::Comprehensive => "comprehensive",
            Stage::Response => "response",
        }
    }

    /// Legal transitions: concise -> comprehensive -> response, or
    /// concise -> response when the edge answers on its own.
    pub fn can_become(self, next: Stage) -> bool {
        matches!(
            (self, next),
            (Stage::Concise, Stage::Comprehensive)
                | (Stage::Concise, Stage::Response)
                | (Stage::Comprehensive, Stage::Response)
        )
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Stage {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "concise" => Ok(Stage::Concise),
            "comprehensive" => Ok(Stage::Comprehensive),
            "response" => Ok(Stage::Response),
            _ => Err(()),
        }
    }
}

/// Leading text of a Response produced in place of a real answer.
pub const ERROR_PREFIX: &str = "[error] ";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DedupKey(pub u64);

impl fmt::Display for DedupKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:016x}", self.0)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EnvelopeError {
    #[error("{stage} envelope must carry nonempty text")]
    EmptyText { stage: Stage },
    #[error("origin_bs_id must be nonempty")]
    EmptyOrigin,
    #[error("dedup_key {found} does not match text (expected {expected})")]
    KeyMismatch { expected: DedupKey, found: DedupKey },
    #[error("illegal stage transition {from} -> {to}")]
    IllegalTransition { from: Stage, to: Stage },
}

/// A prompt or response travelling between end device, edge and cloud.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptEnvelope {
    pub request_id: u64,
    pub stage: Stage,
    pub text: String,
    pub origin_bs_id: String,
    pub terminated_at_edge: bool,
    pub created_unix_ms: u64,
    pub dedup_key: DedupKey,
}

impl PromptEnvelope {
    pub fn new(
        request_id: u64,
        stage: Stage,
        text: impl Into<String>,
        origin_bs_id: impl Into<String>,
        created_unix_ms: u64,
    ) -> Self {
        let text = text.into();
        PromptEnvelope {
            request_id,
            stage,
            dedup_key: dedup_key(&text),
            text,
            origin_bs_id: origin_bs_id.into(),
            terminated_at_edge: false,
            created_unix_ms,
        }
    }

    pub fn concise(
        request_id: u64,
        text: impl Into<String>,
        origin_bs_id: impl Into<String>,
        created_unix_ms: u64,
    ) -> Self {
        Self::new(request_id, Stage::Concise, text, origin_bs_id, created_unix_ms)
    }

    pub fn validate(&self) -> Result<(), EnvelopeError> {
        if self.stage != Stage::Response && self.text.is_empty() {
            return Err(EnvelopeError::EmptyText { stage: self.stage });
        }
        if self.origin_bs_id.is_empty() {
            return Err(EnvelopeError::EmptyOrigin);
        }
        let expected = dedup_key(&self.text);
        if expected != self.dedup_key {
            return Err(EnvelopeError::KeyMismatch {
                expected,
                found: self.dedup_key,
            });
        }
        Ok(())
    }

    /// Moves the envelope to `stage` with new text, keeping its identity.
    pub fn promote(&self, stage: Stage, text: impl Into<String>) -> Result<Self, EnvelopeError> {
        if !self.stage.can_become(stage) {
            return Err(EnvelopeError::IllegalTransition {
                from: self.stage,
                to: stage,
            });
        }
        let text = text.into();
        Ok(PromptEnvelope {
            request_id: self.request_id,
            stage,
            dedup_key: dedup_key(&text),
            text,
            origin_bs_id: self.origin_bs_id.clone(),
            terminated_at_edge: self.terminated_at_edge,
            created_unix_ms: self.created_unix_ms,
        })
    }

    /// A Response carrying [`ERROR_PREFIX`] and `reason`, valid for any
    /// input envelope, including ones that fail [`validate`](Self::validate).
    pub fn error_response(&self, reason: &str) -> Self {
        let text = format!("{ERROR_PREFIX}{reason}");
        PromptEnvelope {
            request_id: self.request_id,
            stage: Stage::Response,
            dedup_key: dedup_key(&text),
            text,
            origin_bs_id: if self.origin_bs_id.is_empty() {
                "unknown".into()
            } else {
                self.origin_bs_id.clone()
            },
            terminated_at_edge: self.terminated_at_edge,
            created_unix_ms: self.created_unix_ms,
        }
    }

    pub fn is_error(&self) -> bool {
        self.stage == Stage::Response && self.text.starts_with(ERROR_PREFIX)
    }
}
