//! Deterministic template backend used by every test.

use std::sync::Mutex;
use std::time::Instant;

use async_trait::async_trait;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;
use synergy_core::netmgmt::{
    extract_intent_rules, parse_template, render_keyword_list, render_template_line, TemplateEntry,
    BLOCK_BEGIN, BLOCK_END,
};

use super::prompt::{EnhancementPrompt, INTENT_HEADER};
use super::{truncate_tokens, Backend, BackendError, GenerationRequest, GenerationResult};
use crate::text::coverage;

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MockSettings {
    /// Seeds sampling for requests with temperature > 0.
    #[serde(default = "default_seed")]
    pub seed: u64,
}

fn default_seed() -> u64 {
    42
}

impl Default for MockSettings {
    fn default() -> Self {
        MockSettings { seed: default_seed() }
    }
}

const INTENT_CLAUSES: [&str; 3] = [
    "I would like to know more about it around",
    "Please tell me more about it around",
    "I am interested in options around",
];

const OPENERS: [&str; 3] = ["Here is what I found about", "About", "Some notes on"];

/// Answers four kinds of prompt:
///
/// * an [`EnhancementPrompt`]: the request, the listed facts and an intent
///   clause naming the region; confidence is the share of request keywords
///   the facts cover.
/// * an intent prompt: the rule-extracted keyword list, confidence 1.
/// * a history block: the same labels one interval later, confidence 0.5.
/// * anything else: an answer restating the first sentence followed by the
///   remaining sentences; confidence is the share of first-sentence keywords
///   the rest covers.
///
/// At temperature 0 the output is a pure function of the prompt. Above 0,
/// fact order and phrasing are drawn from a seeded generator shared by all
/// callers.
#[derive(Debug)]
pub struct MockBackend {
    rng: Mutex<ChaCha8Rng>,
}

impl MockBackend {
    pub fn new(settings: MockSettings) -> Self {
        MockBackend {
            rng: Mutex::new(ChaCha8Rng::seed_from_u64(settings.seed)),
        }
    }

    fn pick<'a>(&self, options: &'a [&'a str], temperature: f64) -> &'a str {
        if temperature > 0.0 {
            let mut rng = self.rng.lock().expect("mock rng poisoned");
            options.choose(&mut *rng).copied().unwrap_or(options[0])
        } else {
            options[0]
        }
    }

    /// Synchronous form of [`Backend::generate`].
    pub fn complete(&self, req: &GenerationRequest) -> Result<GenerationResult, BackendError> {
        req.validate()?;
        let start = Instant::now();
        let (text, confidence) = self.respond(req);
        Ok(GenerationResult {
            text: truncate_tokens(&text, req.max_new_tokens),
            confidence: confidence.clamp(0.0, 1.0),
            latency_s: start.elapsed().as_secs_f64(),
        })
    }

    fn respond(&self, req: &GenerationRequest) -> (String, f64) {
        if let Some(p) = EnhancementPrompt::parse(&req.prompt) {
            return self.enhance(p, req.temperature);
        }
        if let Some(utterance) = req.prompt.strip_prefix(INTENT_HEADER) {
            return (render_keyword_list(&extract_intent_rules(utterance)), 1.0);
        }
        if req.prompt.starts_with(BLOCK_BEGIN) {
            if let Some(next) = persist_history(&req.prompt) {
                return (next, 0.5);
            }
        }
        let (first, rest) = split_first_sentence(&req.prompt);
        let opener = self.pick(&OPENERS, req.temperature);
        let text = if rest.is_empty() {
            format!("{opener} {first}.")
        } else {
            format!("{opener} {first}: {rest}")
        };
        (text, coverage(first, rest))
    }

    fn enhance(&self, p: EnhancementPrompt, temperature: f64) -> (String, f64) {
        if p.facts.is_empty() {
            return (p.request, 0.0);
        }
        let mut facts = p.facts.clone();
        if temperature > 0.0 {
            facts.shuffle(&mut *self.rng.lock().expect("mock rng poisoned"));
        }
        let sep = if p.request.trim_end().ends_with(['.', '?', '!']) {
            " "
        } else {
            ". "
        };
        let clause = self.pick(&INTENT_CLAUSES, temperature);
        let text = format!("{}{sep}{} {clause} {}.", p.request, facts.join(" "), p.region);
        let confidence = coverage(&p.request, &p.facts.join(" "));
        (text, confidence)
    }
}

fn split_first_sentence(text: &str) -> (&str, &str) {
    let text = text.trim();
    let cut = text
        .char_indices()
        .find(|&(i, c)| {
            c == '\n' || (matches!(c, '.' | '?' | '!') && text[i + 1..].starts_with(char::is_whitespace))
        })
        .map(|(i, _)| i);
    match cut {
        Some(i) => (text[..i].trim(), text[i + 1..].trim()),
        None => (text.trim_end_matches(['.', '?', '!']), ""),
    }
}

fn persist_history(prompt: &str) -> Option<String> {
    let entries = parse_template(prompt).ok()?;
    let last = entries.iter().map(|e| e.interval).max()?;
    let mut out = format!("{BLOCK_BEGIN}\n");
    for e in entries.iter().filter(|e| e.interval == last) {
        let line = render_template_line(&TemplateEntry {
            interval: last.checked_add(1)?,
            title: e.title.clone(),
            label: e.label,
        })
        .ok()?;
        out.push_str(&line);
        out.push('\n');
    }
    out.push_str(BLOCK_END);
    out.push('\n');
    Some(out)
}

#[async_trait]
impl Backend for MockBackend {
    fn name(&self) -> &str {
        "mock"
    }

    async fn generate(&self, req: &GenerationRequest) -> Result<GenerationResult, BackendError> {
        self.complete(req)
    }
}
