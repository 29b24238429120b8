use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use regex::Regex;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Slot {
    Bandwidth,
    Src,
    Dst,
    Protection,
    Other,
}

impl Slot {
    pub const ALL: [Slot; 5] = [
        Slot::Bandwidth,
        Slot::Src,
        Slot::Dst,
        Slot::Protection,
        Slot::Other,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Slot::Bandwidth => "bandwidth",
            Slot::Src => "src",
            Slot::Dst => "dst",
            Slot::Protection => "protection",
            Slot::Other => "other",
        }
    }
}

impl fmt::Display for Slot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Slot {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Slot::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| format!("unknown slot `{s}`"))
    }
}

pub type KeywordSet = BTreeSet<(Slot, String)>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntentSample {
    pub utterance: String,
    pub keywords: KeywordSet,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IntentError {
    #[error("line {line}: {reason}")]
    Line { line: usize, reason: String },
    #[error("{pred} predictions for {gold} gold samples")]
    LengthMismatch { pred: usize, gold: usize },
}

fn bandwidth_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r"(?i)\b(\d+(?:\.\d+)?)\s*(tbps|gbps|mbps|kbps|bps|tb/s|gb/s|mb/s|kb/s|b/s)\b")
            .unwrap()
    })
}

fn endpoint_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?i)\b(access|cloud)[\s_-]*(\d+)\b").unwrap())
}

fn protection_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r"(?i)\b(unprotected|protection|protected|protect|protecting)\b").unwrap()
    })
}

fn negation_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r"(?i)\b(no|without|not|don't|dont|skip|disable|disabled|never)\b").unwrap()
    })
}

fn canonical_number(raw: &str) -> String {
    match raw.split_once('.') {
        Some((int, frac)) => {
            let frac = frac.trim_end_matches('0');
            if frac.is_empty() {
                int.to_string()
            } else {
                format!("{int}.{frac}")
            }
        }
        None => raw.to_string(),
    }
}

fn canonical_unit(raw: &str) -> &'static str {
    match raw.to_ascii_lowercase().as_str() {
        "tbps" | "tb/s" => "Tbps",
        "gbps" | "gb/s" => "Gbps",
        "mbps" | "mb/s" => "Mbps",
        "kbps" | "kb/s" => "Kbps",
        _ => "bps",
    }
}

/// Canonical bandwidth text such as `10 Gbps`, or `None` if `raw` is not a
/// number followed by a rate unit.
pub fn canonical_bandwidth(raw: &str) -> Option<String> {
    let m = bandwidth_re().captures(raw.trim())?;
    if m.get(0)?.as_str().len() != raw.trim().len() {
        return None;
    }
    Some(format!(
        "{} {}",
        canonical_number(&m[1]),
        canonical_unit(&m[2])
    ))
}

#[derive(Clone, Copy, PartialEq)]
enum Role {
    Src,
    Dst,
}

/// Role cue from the word right before an endpoint mention, skipping
/// articles and node nouns.
fn role_cue(before: &str) -> Option<Role> {
    let word = before
        .split(|c: char| !c.is_alphanumeric() && c != '>')
        .filter(|w| !w.is_empty())
        .rev()
        .map(str::to_ascii_lowercase)
        .find(|w| !matches!(w.as_str(), "the" | "a" | "an" | "node" | "site" | "endpoint"))?;
    match word.as_str() {
        "from" | "source" | "src" | "origin" | "originating" => Some(Role::Src),
        "to" | "towards" | "toward" | "into" | "destination" | "dst" | "reaching" => Some(Role::Dst),
        _ => None,
    }
}

/// Rule-based keyword extraction.
///
/// Bandwidth is a number followed by a rate unit. Endpoints are `Access N`
/// or `Cloud N` (any case); `from`/`to` style cues assign roles, and
/// endpoints without a cue fill the remaining roles in mention order.
/// Protection is `yes` when mentioned and `no` when negated.
pub fn extract_intent_rules(utterance: &str) -> KeywordSet {
    let mut out = KeywordSet::new();
    if let Some(m) = bandwidth_re().captures(utterance) {
        out.insert((
            Slot::Bandwidth,
            format!("{} {}", canonical_number(&m[1]), canonical_unit(&m[2])),
        ));
    }

    let mut endpoints: Vec<(String, Option<Role>)> = Vec::new();
    for m in endpoint_re().captures_iter(utterance) {
        let whole = m.get(0).expect("group 0");
        let kind = if m[1].eq_ignore_ascii_case("access") {
            "Access"
        } else {
            "Cloud"
        };
        let digits = m[2].trim_start_matches('0');
        let name = format!("{kind} {}", if digits.is_empty() { "0" } else { digits });
        if endpoints.iter().any(|(n, _)| *n == name) {
            continue;
        }
        endpoints.push((name, role_cue(&utterance[..whole.start()])));
    }
    let mut src = endpoints
        .iter()
        .find(|(_, r)| *r == Some(Role::Src))
        .map(|(n, _)| n.clone());
    let mut dst = endpoints
        .iter()
        .find(|(_, r)| *r == Some(Role::Dst))
        .map(|(n, _)| n.clone());
    for (name, _) in &endpoints {
        if src.as_ref() == Some(name) || dst.as_ref() == Some(name) {
            continue;
        }
        if src.is_none() {
            src = Some(name.clone());
        } else if dst.is_none() {
            dst = Some(name.clone());
        } else {
            out.insert((Slot::Other, name.clone()));
        }
    }
    if let Some(s) = src {
        out.insert((Slot::Src, s));
    }
    if let Some(d) = dst {
        out.insert((Slot::Dst, d));
    }

    if let Some(m) = protection_re().find(utterance) {
        let negated = m.as_str().eq_ignore_ascii_case("unprotected") || {
            let before = &utterance[..m.start()];
            let tail: Vec<&str> = before.split_whitespace().rev().take(3).collect();
            tail.iter().any(|w| negation_re().is_match(w))
        };
        out.insert((
            Slot::Protection,
            if negated { "no" } else { "yes" }.to_string(),
        ));
    }
    out
}

/// Parses `slot:value` pairs separated by tabs, newlines, `;` or `,`.
/// Unparseable pieces are ignored, so free-form model output degrades to a
/// partial set rather than an error.
pub fn parse_keyword_list(text: &str) -> KeywordSet {
    text.split(['\t', '\n', ';', ','])
        .filter_map(|piece| {
            let (slot, value) = piece.split_once(':')?;
            let slot: Slot = slot.trim().to_ascii_lowercase().parse().ok()?;
            let value = value.trim();
            if value.is_empty() {
                return None;
            }
            let value = if slot == Slot::Bandwidth {
                canonical_bandwidth(value)?
            } else {
                value.to_string()
            };
            Some((slot, value))
        })
        .collect()
}

pub fn render_keyword_list(keywords: &KeywordSet) -> String {
    keywords
        .iter()
        .map(|(s, v)| format!("{s}:{v}"))
        .collect::<Vec<_>>()
        .join("\t")
}

/// Reads `utterance<TAB>slot:value<TAB>...` lines. Blank lines and lines
/// whose first non-blank character is `#` are skipped.
pub fn parse_intent_dataset(text: &str) -> Result<Vec<IntentSample>, IntentError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let raw = raw.trim_end_matches('\r');
        if raw.trim().is_empty() || raw.trim_start().starts_with('#') {
            continue;
        }
        let err = |reason: String| IntentError::Line { line, reason };
        let mut cols = raw.split('\t');
        let utterance = cols.next().unwrap_or_default().trim().to_string();
        if utterance.is_empty() {
            return Err(err("empty utterance".into()));
        }
        let mut keywords = KeywordSet::new();
        for col in cols {
            let (slot, value) = col
                .split_once(':')
                .ok_or_else(|| err(format!("expected slot:value, got {col:?}")))?;
            let slot: Slot = slot.trim().parse().map_err(err)?;
            let value = value.trim();
            if value.is_empty() {
                return Err(err(format!("empty value for slot {slot}")));
            }
            let value = if slot == Slot::Bandwidth {
                canonical_bandwidth(value)
                    .ok_or_else(|| err(format!("bandwidth {value:?} is not number+unit")))?
            } else {
                value.to_string()
            };
            keywords.insert((slot, value));
        }
        if keywords.is_empty() {
            return Err(err("no keywords".into()));
        }
        out.push(IntentSample {
            utterance,
            keywords,
        });
    }
    Ok(out)
}

pub fn render_intent_dataset(samples: &[IntentSample]) -> String {
    let mut out = String::new();
    for s in samples {
        out.push_str(&s.utterance);
        out.push('\t');
        out.push_str(&render_keyword_list(&s.keywords));
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntentScore {
    pub samples: usize,
    pub exact_match: f64,
    /// Micro-averaged over (slot, value) pairs.
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl IntentScore {
    pub fn render_kv(&self) -> String {
        format!(
            "samples={}\nexact_match={:.4}\nprecision={:.4}\nrecall={:.4}\nf1={:.4}\n",
            self.samples, self.exact_match, self.precision, self.recall, self.f1
        )
    }
}

pub fn score_intents(pred: &[KeywordSet], gold: &[KeywordSet]) -> Result<IntentScore, IntentError> {
    if pred.len() != gold.len() {
        return Err(IntentError::LengthMismatch {
            pred: pred.len(),
            gold: gold.len(),
        });
    }
    let (mut exact, mut tp, mut n_pred, mut n_gold) = (0usize, 0usize, 0usize, 0usize);
    for (p, g) in pred.iter().zip(gold) {
        // an empty prediction never counts as a match
        if p == g && !p.is_empty() {
            exact += 1;
        }
        tp += p.intersection(g).count();
        n_pred += p.len();
        n_gold += g.len();
    }
    let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
    let precision = ratio(tp, n_pred);
    let recall = ratio(tp, n_gold);
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    Ok(IntentScore {
        samples: gold.len(),
        exact_match: ratio(exact, gold.len()),
        precision,
        recall,
        f1,
    })
}

const VERBS: [&str; 8] = [
    "establish",
    "set up",
    "create",
    "provision",
    "build",
    "open",
    "bring up",
    "configure",
];
const OPENERS: [&str; 6] = ["", "please ", "I want to ", "can you ", "we need to ", "kindly "];
const UNITS: [&str; 4] = ["Kbps", "Mbps", "Gbps", "Tbps"];

/// Seeded synthetic intent corpus composed from slot grammars.
pub fn generate_intent_corpus(seed: u64, n: usize) -> Vec<IntentSample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let amount = [1, 2, 5, 10, 20, 25, 40, 50, 100, 200, 400][rng.gen_range(0..11)];
        let unit = *UNITS.choose(&mut rng).expect("nonempty");
        let unit_text = if rng.gen_bool(0.3) {
            unit.to_lowercase()
        } else {
            unit.to_string()
        };
        let space = if rng.gen_bool(0.5) { " " } else { "" };
        let bw_text = format!("{amount}{space}{unit_text}");
        let bw = format!("{amount} {unit}");

        let pick = |rng: &mut ChaCha8Rng| {
            let kind = if rng.gen_bool(0.5) { "Access" } else { "Cloud" };
            format!("{kind} {}", rng.gen_range(1..=9))
        };
        let src = pick(&mut rng);
        let mut dst = pick(&mut rng);
        while dst == src {
            dst = pick(&mut rng);
        }
        let cased = |rng: &mut ChaCha8Rng, s: &str| {
            if rng.gen_bool(0.3) {
                s.to_lowercase()
            } else {
                s.to_string()
            }
        };
        let src_text = cased(&mut rng, &src);
        let dst_text = cased(&mut rng, &dst);

        let protection = match rng.gen_range(0..3) {
            0 => None,
            1 => Some(true),
            _ => Some(false),
        };
        let prot_text = match protection {
            None => "",
            Some(true) => {
                [" with traffic protection", " with protection", ", protected", " and protect it"]
                    [rng.gen_range(0..4)]
            }
            Some(false) => [" without protection", ", unprotected", " with no protection"]
                [rng.gen_range(0..3)],
        };

        let opener = *OPENERS.choose(&mut rng).expect("nonempty");
        let verb = *VERBS.choose(&mut rng).expect("nonempty");
        let body = match rng.gen_range(0..4) {
            0 => format!("{verb} a {bw_text} connection from {src_text} to {dst_text}"),
            1 => format!("{verb} a link to {dst_text} from {src_text} at {bw_text}"),
            2 => format!("connect {src_text} and {dst_text} at {bw_text}"),
            _ => format!("{verb} {bw_text} between {src_text} and {dst_text}"),
        };
        let utterance = format!("{opener}{body}{prot_text}");

        let mut keywords = KeywordSet::new();
        keywords.insert((Slot::Bandwidth, bw));
        keywords.insert((Slot::Src, src));
        keywords.insert((Slot::Dst, dst));
        if let Some(p) = protection {
            keywords.insert((Slot::Protection, if p { "yes" } else { "no" }.into()));
        }
        out.push(IntentSample {
            utterance,
            keywords,
        });
    }
    out
}
