use std::fmt;
use std::str::FromStr;

use crate::cost_model::Framework;

use super::params::SimParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SimEventKind {
    Arrive,
    HandshakeDone,
    EdgeBatchStart,
    EdgeDone,
    ForwardStart,
    CloudStart,
    CloudDone,
    Deliver,
    DedupHit,
}

impl SimEventKind {
    pub const ALL: [SimEventKind; 9] = [
        SimEventKind::Arrive,
        SimEventKind::HandshakeDone,
        SimEventKind::EdgeBatchStart,
        SimEventKind::EdgeDone,
        SimEventKind::ForwardStart,
        SimEventKind::CloudStart,
        SimEventKind::CloudDone,
        SimEventKind::Deliver,
        SimEventKind::DedupHit,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SimEventKind::Arrive => "arrive",
            SimEventKind::HandshakeDone => "handshake_done",
            SimEventKind::EdgeBatchStart => "edge_batch_start",
            SimEventKind::EdgeDone => "edge_done",
            SimEventKind::ForwardStart => "forward_start",
            SimEventKind::CloudStart => "cloud_start",
            SimEventKind::CloudDone => "cloud_done",
            SimEventKind::Deliver => "deliver",
            SimEventKind::DedupHit => "dedup_hit",
        }
    }
}

impl fmt::Display for SimEventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SimEventKind {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        SimEventKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SimEvent {
    pub time_ns: u64,
    pub kind: SimEventKind,
    pub request_id: u64,
}

/// Event log and latency record of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct SimTrace {
    pub framework: Framework,
    pub params: SimParams,
    /// Sorted by time; ties keep the order in which they were produced.
    pub events: Vec<SimEvent>,
    /// Time of the last delivery.
    pub end_to_end_ns: u64,
    /// Indexed by request id.
    pub per_request_latency_ns: Vec<u64>,
}

impl SimTrace {
    pub fn end_to_end_s(&self) -> f64 {
        self.end_to_end_ns as f64 / 1e9
    }

    pub fn count(&self, kind: SimEventKind) -> usize {
        self.events.iter().filter(|e| e.kind == kind).count()
    }

    /// Line-delimited event log: a `#` header, then `time_ns<TAB>kind<TAB>request_id`.
    pub fn to_event_log(&self) -> String {
        let mut out = String::with_capacity(self.events.len() * 24 + 64);
        out.push_str(&format!(
            "# sim-trace v1 framework={} n={} seed={}\n",
            self.framework, self.params.n_requests, self.params.rng_seed
        ));
        for e in &self.events {
            out.push_str(&format!("{}\t{}\t{}\n", e.time_ns, e.kind, e.request_id));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceHeader {
    pub framework: Framework,
    pub n_requests: u64,
    pub seed: u64,
}

/// Parses the output of [`SimTrace::to_event_log`]. Errors carry the
/// 1-based line number.
pub fn parse_event_log(text: &str) -> Result<(TraceHeader, Vec<SimEvent>), String> {
    let mut lines = text.lines().enumerate();
    let (_, head) = lines.next().ok_or("line 1: empty log")?;
    let rest = head
        .strip_prefix("# sim-trace v1 ")
        .ok_or("line 1: expected `# sim-trace v1` header")?;
    let mut framework = None;
    let mut n = None;
    let mut seed = None;
    for part in rest.split(' ') {
        match part.split_once('=') {
            Some(("framework", v)) => {
                framework = Some(v.parse::<Framework>().map_err(|e| format!("line 1: {e}"))?)
            }
            Some(("n", v)) => n = Some(v.parse::<u64>().map_err(|e| format!("line 1: n: {e}"))?),
            Some(("seed", v)) => {
                seed = Some(v.parse::<u64>().map_err(|e| format!("line 1: seed: {e}"))?)
            }
            _ => return Err(format!("line 1: unexpected header item `{part}`")),
        }
    }
    let header = TraceHeader {
        framework: framework.ok_or("line 1: missing framework")?,
        n_requests: n.ok_or("line 1: missing n")?,
        seed: seed.ok_or("line 1: missing seed")?,
    };
    let mut events = Vec::new();
    let mut last = 0u64;
    for (i, line) in lines {
        let lineno = i + 1;
        let mut cols = line.split('\t');
        let (Some(t), Some(k), Some(id), None) = (cols.next(), cols.next(), cols.next(), cols.next())
        else {
            return Err(format!("line {lineno}: expected 3 tab-separated columns"));
        };
        let time_ns: u64 = t.parse().map_err(|e| format!("line {lineno}: time_ns: {e}"))?;
        let kind: SimEventKind = k
            .parse()
            .map_err(|_| format!("line {lineno}: unknown event kind `{k}`"))?;
        let request_id: u64 = id
            .parse()
            .map_err(|e| format!("line {lineno}: request_id: {e}"))?;
        if time_ns < last {
            return Err(format!("line {lineno}: events out of time order"));
        }
        last = time_ns;
        events.push(SimEvent {
            time_ns,
            kind,
            request_id,
        });
    }
    Ok((header, events))
}
