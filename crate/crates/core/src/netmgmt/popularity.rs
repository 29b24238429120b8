use std::collections::{BTreeMap, HashMap};
use std::io;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

/// Half of a 365-day year, in seconds.
pub const HALF_YEAR_S: i64 = 182 * 86_400 + 43_200;

#[derive(Debug, Error)]
pub enum NetError {
    #[error("no viewing records")]
    NoRecords,
    #[error("no viewing records fall inside the window")]
    EmptyWindow,
    #[error("interval length must be > 0 seconds")]
    BadInterval,
    #[error("invalid window [{start}, {end})")]
    BadWindow { start: i64, end: i64 },
    #[error("only {found} distinct titles in the window, {needed} requested")]
    TooFewTitles { needed: usize, found: usize },
    #[error("invalid title {0:?}: titles must be nonempty single-line text")]
    BadTitle(String),
    #[error("split ratio {ratio} over {intervals} intervals leaves an empty side")]
    BadSplit { ratio: f64, intervals: usize },
    #[error("prediction shape {pred:?} does not match truth shape {truth:?}")]
    ShapeMismatch {
        pred: (usize, usize),
        truth: (usize, usize),
    },
    #[error("CSV row {row}: {reason}")]
    Csv { row: usize, reason: String },
    #[error("CSV: {0}")]
    CsvFormat(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct ViewingRecord {
    /// Unix seconds.
    pub timestamp: i64,
    pub title: String,
}

/// Time span to bucket, end-exclusive.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Window {
    /// The last `n` seconds up to and including the newest record.
    Last(i64),
    Explicit { start: i64, end: i64 },
}

impl Default for Window {
    fn default() -> Self {
        Window::Last(HALF_YEAR_S)
    }
}

/// Viewing records bucketed into fixed intervals with per-title presence
/// labels for the `K` most frequent titles.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntervalDataset {
    pub interval_len_s: i64,
    pub window_start: i64,
    /// Global index of each row, increasing.
    pub intervals: Vec<u64>,
    /// Most frequent first; ties broken lexicographically.
    pub titles: Vec<String>,
    /// `labels[row][title]`.
    pub labels: Vec<Vec<bool>>,
}

impl IntervalDataset {
    pub fn len(&self) -> usize {
        self.intervals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn interval_start(&self, index: u64) -> i64 {
        self.window_start + index as i64 * self.interval_len_s
    }

    pub fn row_of(&self, index: u64) -> Option<usize> {
        self.intervals.binary_search(&index).ok()
    }

    fn subset(&self, rows: std::ops::Range<usize>) -> IntervalDataset {
        IntervalDataset {
            interval_len_s: self.interval_len_s,
            window_start: self.window_start,
            intervals: self.intervals[rows.clone()].to_vec(),
            titles: self.titles.clone(),
            labels: self.labels[rows].to_vec(),
        }
    }
}

fn valid_title(t: &str) -> bool {
    !t.trim().is_empty() && !t.contains(['\n', '\r'])
}

/// Buckets records into half-open intervals `[start + i*len, start + (i+1)*len)`
/// anchored at the window start.
pub fn bucketize(
    records: &[ViewingRecord],
    interval_len_s: i64,
    top_k: usize,
    window: Window,
) -> Result<IntervalDataset, NetError> {
    if records.is_empty() {
        return Err(NetError::NoRecords);
    }
    if interval_len_s <= 0 {
        return Err(NetError::BadInterval);
    }
    let (start, end) = match window {
        Window::Last(span) => {
            let end = records.iter().map(|r| r.timestamp).max().expect("nonempty") + 1;
            (end - span, end)
        }
        Window::Explicit { start, end } => (start, end),
    };
    if start >= end {
        return Err(NetError::BadWindow { start, end });
    }
    let in_window: Vec<&ViewingRecord> = records
        .iter()
        .filter(|r| (start..end).contains(&r.timestamp))
        .collect();
    if in_window.is_empty() {
        return Err(NetError::EmptyWindow);
    }
    if let Some(r) = in_window.iter().find(|r| !valid_title(&r.title)) {
        return Err(NetError::BadTitle(r.title.clone()));
    }

    let mut counts: BTreeMap<&str, u64> = BTreeMap::new();
    for r in &in_window {
        *counts.entry(r.title.as_str()).or_default() += 1;
    }
    if counts.len() < top_k {
        return Err(NetError::TooFewTitles {
            needed: top_k,
            found: counts.len(),
        });
    }
    let mut ranked: Vec<(&str, u64)> = counts.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    let titles: Vec<String> = ranked[..top_k].iter().map(|(t, _)| t.to_string()).collect();
    let column: HashMap<&str, usize> = titles
        .iter()
        .enumerate()
        .map(|(i, t)| (t.as_str(), i))
        .collect();

    let span = end - start;
    let n_intervals = ((span + interval_len_s - 1) / interval_len_s) as usize;
    let mut labels = vec![vec![false; top_k]; n_intervals];
    for r in in_window {
        if let Some(&m) = column.get(r.title.as_str()) {
            let i = ((r.timestamp - start) / interval_len_s) as usize;
            labels[i][m] = true;
        }
    }
    Ok(IntervalDataset {
        interval_len_s,
        window_start: start,
        intervals: (0..n_intervals as u64).collect(),
        titles,
        labels,
    })
}

/// Chronological split: the first `floor(ratio * n)` intervals train, the
/// rest test.
pub fn split_train_test(
    ds: &IntervalDataset,
    ratio: f64,
) -> Result<(IntervalDataset, IntervalDataset), NetError> {
    let n = ds.len();
    let bad = || NetError::BadSplit {
        ratio,
        intervals: n,
    };
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(bad());
    }
    // tolerate representation error such as 0.95 * 100 = 94.999...
    let n_train = (ratio * n as f64 + 1e-9).floor() as usize;
    if n_train == 0 || n_train >= n {
        return Err(bad());
    }
    Ok((ds.subset(0..n_train), ds.subset(n_train..n)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Baseline {
    /// Predict presence iff the title appeared in more than half of the
    /// training intervals.
    Frequency,
    /// First-order per-title Markov chain rolled forward from the last
    /// training interval.
    Markov1,
}

impl std::str::FromStr for Baseline {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "frequency" => Ok(Baseline::Frequency),
            "markov1" => Ok(Baseline::Markov1),
            _ => Err(format!("unknown method `{s}` (frequency or markov1)")),
        }
    }
}

/// Predicts `horizon` intervals following `train`, using nothing but the
/// training labels.
pub fn predict_baseline(train: &IntervalDataset, method: Baseline, horizon: usize) -> Vec<Vec<bool>> {
    let k = train.titles.len();
    let n = train.len();
    if n == 0 {
        return vec![vec![false; k]; horizon];
    }
    let rate: Vec<f64> = (0..k)
        .map(|m| train.labels.iter().filter(|row| row[m]).count() as f64 / n as f64)
        .collect();
    match method {
        Baseline::Frequency => {
            let row: Vec<bool> = rate.iter().map(|&r| r > 0.5).collect();
            vec![row; horizon]
        }
        Baseline::Markov1 => {
            // counts[m][prev][next]
            let mut counts = vec![[[0u64; 2]; 2]; k];
            for w in train.labels.windows(2) {
                for m in 0..k {
                    counts[m][usize::from(w[0][m])][usize::from(w[1][m])] += 1;
                }
            }
            let mut state = train.labels[n - 1].clone();
            let mut out = Vec::with_capacity(horizon);
            for _ in 0..horizon {
                let next: Vec<bool> = (0..k)
                    .map(|m| {
                        let c = counts[m][usize::from(state[m])];
                        let total = c[0] + c[1];
                        if total == 0 {
                            rate[m] > 0.5
                        } else {
                            c[1] as f64 / total as f64 > 0.5
                        }
                    })
                    .collect();
                out.push(next.clone());
                state = next;
            }
            out
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PopularityScore {
    /// Mean over all (interval, title) cells.
    pub accuracy: f64,
    pub per_title: Vec<f64>,
}

pub fn score(pred: &[Vec<bool>], truth: &[Vec<bool>]) -> Result<PopularityScore, NetError> {
    let shape = |m: &[Vec<bool>]| (m.len(), m.first().map_or(0, Vec::len));
    if pred.len() != truth.len()
        || pred.iter().zip(truth).any(|(p, t)| p.len() != t.len())
        || truth.is_empty()
    {
        return Err(NetError::ShapeMismatch {
            pred: shape(pred),
            truth: shape(truth),
        });
    }
    let k = truth[0].len();
    let rows = truth.len() as f64;
    let per_title: Vec<f64> = (0..k)
        .map(|m| {
            pred.iter()
                .zip(truth)
                .filter(|(p, t)| p[m] == t[m])
                .count() as f64
                / rows
        })
        .collect();
    let accuracy = if k == 0 {
        1.0
    } else {
        per_title.iter().sum::<f64>() / k as f64
    };
    Ok(PopularityScore {
        accuracy,
        per_title,
    })
}

fn parse_timestamp(raw: &str) -> Option<i64> {
    let raw = raw.trim();
    if let Ok(secs) = raw.parse::<i64>() {
        return Some(secs);
    }
    for fmt in ["%Y-%m-%d %H:%M:%S", "%Y-%m-%dT%H:%M:%S", "%Y-%m-%dT%H:%M:%SZ"] {
        if let Ok(dt) = chrono::NaiveDateTime::parse_from_str(raw, fmt) {
            return Some(dt.and_utc().timestamp());
        }
    }
    None
}

/// Reads viewing records from CSV with a header row. Timestamps are unix
/// seconds or `YYYY-MM-DD HH:MM:SS` (UTC).
pub fn load_viewing_csv<R: io::Read>(
    reader: R,
    timestamp_column: &str,
    title_column: &str,
) -> Result<Vec<ViewingRecord>, NetError> {
    let mut rdr = csv::Reader::from_reader(reader);
    let headers = rdr.headers()?.clone();
    let col = |name: &str| {
        headers.iter().position(|h| h == name).ok_or(NetError::Csv {
            row: 1,
            reason: format!("missing column `{name}`"),
        })
    };
    let ts_col = col(timestamp_column)?;
    let title_col = col(title_column)?;
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row = i + 2;
        let raw_ts = rec.get(ts_col).unwrap_or("");
        let timestamp = parse_timestamp(raw_ts).ok_or_else(|| NetError::Csv {
            row,
            reason: format!("unparseable timestamp {raw_ts:?}"),
        })?;
        let title = rec.get(title_col).unwrap_or("").trim().to_string();
        if !valid_title(&title) {
            return Err(NetError::Csv {
                row,
                reason: "empty title".into(),
            });
        }
        out.push(ViewingRecord { timestamp, title });
    }
    Ok(out)
}

pub fn write_viewing_csv<W: io::Write>(writer: W, records: &[ViewingRecord]) -> Result<(), NetError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["timestamp", "title"])?;
    for r in records {
        w.write_record([r.timestamp.to_string(), r.title.clone()])?;
    }
    w.flush()?;
    Ok(())
}

const SYNTHETIC_TITLES: [&str; 30] = [
    "Harbor Lights",
    "The Glass Orchard",
    "Midnight Relay",
    "Copper Sky",
    "A Quiet Frontier",
    "Northbound",
    "The Last Cartographer",
    "Salt and Ember",
    "Paper Moons",
    "Signal Lost",
    "The Long Tide",
    "Iron Meadow",
    "Velvet Engine",
    "Winter Protocol",
    "Lanterns",
    "The Cobalt Room",
    "Static Bloom",
    "Echo Valley",
    "Sunday Machines",
    "Distant Shores",
    "The Ninth Bridge",
    "Hollow Crown",
    "Saffron Road",
    "Blue Hour",
    "Kite Season",
    "The Understudy",
    "Granite Heart",
    "Orbiting Home",
    "Little Thunder",
    "Marble Garden",
];

/// Seeded synthetic viewing log: Zipf-like title popularity modulated by a
/// daily cycle, so presence labels carry both frequency and temporal signal.
pub fn generate_viewing_records(seed: u64, days: u32, start_unix: i64) -> Vec<ViewingRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let quarter = 21_600i64;
    // evening-heavy daily profile over the four 6-hour quarters
    let daily = [0.35, 0.6, 0.9, 1.25];
    let mut out = Vec::new();
    for slot in 0..(days as i64 * 4) {
        let q = (slot % 4) as usize;
        for (rank, title) in SYNTHETIC_TITLES.iter().enumerate() {
            let base = 0.95 / (1.0 + rank as f64 * 0.18);
            // some titles only run in alternate quarters
            let alternating = rank % 5 == 3 && slot % 2 == 1;
            let p = if alternating { 0.03 } else { (base * daily[q]).min(0.97) };
            if rng.gen::<f64>() < p {
                let views = 1 + rng.gen_range(0..3);
                for _ in 0..views {
                    out.push(ViewingRecord {
                        timestamp: start_unix + slot * quarter + rng.gen_range(0..quarter),
                        title: (*title).to_string(),
                    });
                }
            }
        }
    }
    out.sort();
    out
}
