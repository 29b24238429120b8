//! Text form of interval presence labels.
//!
//! One line per (interval, title):
//!
//! ```text
//! In interval 1, movie 'Iron man 2' appear :1
//! ```
//!
//! A block holds the lines of one interval between [`BLOCK_BEGIN`] and
//! [`BLOCK_END`], each on its own line.

use thiserror::Error;

use super::popularity::IntervalDataset;

pub const BLOCK_BEGIN: &str = "<|history|>";
pub const BLOCK_END: &str = "<|endofhistory|>";

const PREFIX: &str = "In interval ";
const MOVIE: &str = ", movie '";
const SUFFIX: &str = "' appear :";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TemplateEntry {
    pub interval: u64,
    pub title: String,
    pub label: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TemplateError {
    #[error("line {line}: {reason}; expected `In interval <n>, movie '<title>' appear :<0|1>`")]
    Line { line: usize, reason: String },
    #[error("block must start with {BLOCK_BEGIN} and end with {BLOCK_END}")]
    Unwrapped,
    #[error("interval {0} not in dataset")]
    UnknownInterval(u64),
    #[error("title {0:?} cannot be rendered on one line")]
    BadTitle(String),
}

pub fn render_template_line(entry: &TemplateEntry) -> Result<String, TemplateError> {
    if entry.title.is_empty() || entry.title.contains(['\n', '\r']) {
        return Err(TemplateError::BadTitle(entry.title.clone()));
    }
    Ok(format!(
        "{PREFIX}{}{MOVIE}{}{SUFFIX}{}",
        entry.interval,
        entry.title,
        u8::from(entry.label)
    ))
}

/// Parses one line. `line` is the 1-based position used in errors.
pub fn parse_template_line(text: &str, line: usize) -> Result<TemplateEntry, TemplateError> {
    let err = |reason: &str| TemplateError::Line {
        line,
        reason: reason.to_string(),
    };
    let rest = text.strip_prefix(PREFIX).ok_or_else(|| err("missing `In interval `"))?;
    let (num, rest) = rest.split_once(MOVIE).ok_or_else(|| err("missing `, movie '`"))?;
    if num.is_empty() || !num.bytes().all(|b| b.is_ascii_digit()) || (num.len() > 1 && num.starts_with('0'))
    {
        return Err(err("interval is not a canonical integer"));
    }
    let interval = num.parse().map_err(|_| err("interval out of range"))?;
    // titles may themselves contain the suffix text; the real one is last
    let cut = rest.rfind(SUFFIX).ok_or_else(|| err("missing `' appear :`"))?;
    let title = &rest[..cut];
    let label = match &rest[cut + SUFFIX.len()..] {
        "0" => false,
        "1" => true,
        _ => return Err(err("label must be 0 or 1")),
    };
    if title.is_empty() {
        return Err(err("empty title"));
    }
    if title.contains(['\n', '\r']) {
        return Err(err("title spans lines"));
    }
    Ok(TemplateEntry {
        interval,
        title: title.to_string(),
        label,
    })
}

/// Renders the block for the interval with global index `interval`.
pub fn render_template(ds: &IntervalDataset, interval: u64) -> Result<String, TemplateError> {
    let row = ds
        .row_of(interval)
        .ok_or(TemplateError::UnknownInterval(interval))?;
    let mut out = String::from(BLOCK_BEGIN);
    out.push('\n');
    for (title, &label) in ds.titles.iter().zip(&ds.labels[row]) {
        out.push_str(&render_template_line(&TemplateEntry {
            interval,
            title: title.clone(),
            label,
        })?);
        out.push('\n');
    }
    out.push_str(BLOCK_END);
    out.push('\n');
    Ok(out)
}

/// Parses a wrapped block, or bare template lines when no block markers
/// are present. Blank lines are ignored.
pub fn parse_template(text: &str) -> Result<Vec<TemplateEntry>, TemplateError> {
    let lines: Vec<(usize, &str)> = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.trim().is_empty())
        .collect();
    let wrapped_start = lines.first().map(|(_, l)| *l == BLOCK_BEGIN);
    let wrapped_end = lines.last().map(|(_, l)| *l == BLOCK_END);
    let body = match (wrapped_start, wrapped_end) {
        (Some(true), Some(true)) if lines.len() >= 2 => &lines[1..lines.len() - 1],
        (Some(true), _) | (_, Some(true)) => return Err(TemplateError::Unwrapped),
        _ => &lines[..],
    };
    body.iter()
        .map(|&(n, l)| {
            if l == BLOCK_BEGIN || l == BLOCK_END {
                Err(TemplateError::Unwrapped)
            } else {
                parse_template_line(l, n)
            }
        })
        .collect()
}
