//! Canned completions keyed by normalized prompt.
//!
//! File format, one record per line:
//!
//! ```text
//! <normalized prompt> TAB <completion> [TAB <confidence>]
//! ```
//!
//! `\\`, `\t`, `\n` and `\r` are escaped in both text fields. Blank lines and
//! lines starting with `#` are skipped, so a prompt that starts with `#` is
//! written with a leading `\#`. Confidence defaults to 0.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use async_trait::async_trait;
use serde::Deserialize;
use synergy_core::protocol::normalize_for_dedup;
use thiserror::Error;

use super::{Backend, BackendError, GenerationRequest, GenerationResult};

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReplaySettings {
    pub path: PathBuf,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplayEntry {
    pub prompt: String,
    pub completion: String,
    pub confidence: f64,
}

#[derive(Debug, Error)]
pub enum ReplayError {
    #[error("replay corpus line {line}: {reason}")]
    Line { line: usize, reason: String },
    #[error("cannot read replay corpus {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

fn escape(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\t' => out.push_str("\\t"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            c => out.push(c),
        }
    }
    out
}

fn unescape(text: &str) -> Result<String, String> {
    let mut out = String::with_capacity(text.len());
    let mut chars = text.chars();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        match chars.next() {
            Some('\\') => out.push('\\'),
            Some('t') => out.push('\t'),
            Some('n') => out.push('\n'),
            Some('r') => out.push('\r'),
            Some('#') => out.push('#'),
            Some(other) => return Err(format!("unknown escape \\{other}")),
            None => return Err("dangling backslash".into()),
        }
    }
    Ok(out)
}

/// Parses a corpus. Prompts are normalized; a prompt that appears twice
/// after normalization is an error.
pub fn parse_replay_corpus(text: &str) -> Result<Vec<ReplayEntry>, ReplayError> {
    let mut seen = HashMap::new();
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let raw = raw.trim_end_matches('\r');
        if raw.trim().is_empty() || raw.starts_with('#') {
            continue;
        }
        let err = |reason: String| ReplayError::Line { line, reason };
        let fields: Vec<&str> = raw.split('\t').collect();
        if !(2..=3).contains(&fields.len()) {
            return Err(err(format!("expected 2 or 3 tab-separated fields, found {}", fields.len())));
        }
        let prompt = normalize_for_dedup(&unescape(fields[0]).map_err(err)?);
        if prompt.is_empty() {
            return Err(err("empty prompt".into()));
        }
        let completion = unescape(fields[1]).map_err(err)?;
        let confidence = match fields.get(2) {
            None => 0.0,
            Some(c) => match c.trim().parse::<f64>() {
                Ok(v) if (0.0..=1.0).contains(&v) => v,
                _ => return Err(err(format!("confidence {c:?} is not a number in [0, 1]"))),
            },
        };
        if let Some(first) = seen.insert(prompt.clone(), line) {
            return Err(err(format!("prompt already defined on line {first}")));
        }
        out.push(ReplayEntry {
            prompt,
            completion,
            confidence,
        });
    }
    Ok(out)
}

pub fn render_replay_corpus(entries: &[ReplayEntry]) -> String {
    let mut out = String::new();
    for e in entries {
        let prompt = escape(&normalize_for_dedup(&e.prompt));
        if prompt.starts_with('#') {
            out.push('\\');
        }
        out.push_str(&prompt);
        out.push('\t');
        out.push_str(&escape(&e.completion));
        out.push('\t');
        out.push_str(&e.confidence.to_string());
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, Default)]
pub struct ReplayBackend {
    entries: HashMap<String, (String, f64)>,
}

impl ReplayBackend {
    pub fn from_entries(entries: impl IntoIterator<Item = ReplayEntry>) -> Self {
        ReplayBackend {
            entries: entries
                .into_iter()
                .map(|e| (normalize_for_dedup(&e.prompt), (e.completion, e.confidence)))
                .collect(),
        }
    }

    pub fn load(path: &Path) -> Result<Self, ReplayError> {
        let text = std::fs::read_to_string(path).map_err(|source| ReplayError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Ok(Self::from_entries(parse_replay_corpus(&text)?))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

#[async_trait]
impl Backend for ReplayBackend {
    fn name(&self) -> &str {
        "replay"
    }

    async fn generate(&self, req: &GenerationRequest) -> Result<GenerationResult, BackendError> {
        req.validate()?;
        let start = Instant::now();
        let key = normalize_for_dedup(&req.prompt);
        let (text, confidence) = self
            .entries
            .get(&key)
            .ok_or(BackendError::NotFound(key))?;
        Ok(GenerationResult {
            text: text.clone(),
            confidence: *confidence,
            latency_s: start.elapsed().as_secs_f64(),
        })
    }
}
