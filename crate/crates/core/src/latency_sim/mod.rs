//! Deterministic discrete-event simulation of a request workload under each
//! deployment framework.
//!
//! Time is kept in integer nanoseconds. Links and servers are FIFO; all
//! randomness (duplicate placement, optional arrival jitter) comes from a
//! seeded ChaCha stream, so equal inputs give byte-identical traces.

mod engine;
mod params;
mod summary;
mod trace;

pub mod check;

pub use engine::simulate;
pub use params::{secs_to_ns, tx_time_ns, SimError, SimParams};
pub use summary::{compare_frameworks, summarize, Comparison, SimSummary};
pub use trace::{parse_event_log, SimEvent, SimEventKind, SimTrace, TraceHeader};
