//! Trace invariants, checked from the event sequence alone.

use std::collections::BTreeMap;

use crate::cost_model::Framework;

use super::params::tx_time_ns;
use super::trace::{SimEventKind, SimTrace};

/// Events are globally time-ordered.
pub fn time_ordered(trace: &SimTrace) -> Result<(), String> {
    match trace.events.windows(2).find(|w| w[1].time_ns < w[0].time_ns) {
        Some(w) => Err(format!("event {:?} precedes {:?}", w[0], w[1])),
        None => Ok(()),
    }
}

/// Each request finishes exactly once: by `deliver`, or for synergy
/// possibly by `dedup_hit`.
pub fn conservation(trace: &SimTrace) -> Result<(), String> {
    let n = trace.params.n_requests as usize;
    let mut finished = vec![0u32; n];
    for e in &trace.events {
        match e.kind {
            SimEventKind::Deliver => finished[e.request_id as usize] += 1,
            SimEventKind::DedupHit => {
                if trace.framework != Framework::Synergy {
                    return Err(format!("dedup_hit under {}", trace.framework));
                }
                finished[e.request_id as usize] += 1;
            }
            _ => {}
        }
    }
    match finished.iter().position(|&c| c != 1) {
        Some(id) => Err(format!("request {id} finished {} times", finished[id])),
        None => Ok(()),
    }
}

fn lifecycle_rank(kind: SimEventKind) -> Option<u8> {
    Some(match kind {
        SimEventKind::Arrive => 0,
        SimEventKind::EdgeBatchStart => 1,
        SimEventKind::EdgeDone => 2,
        SimEventKind::ForwardStart => 3,
        SimEventKind::CloudStart => 4,
        SimEventKind::CloudDone => 5,
        SimEventKind::Deliver | SimEventKind::DedupHit => 6,
        // placement differs by framework
        SimEventKind::HandshakeDone => return None,
    })
}

/// Along each request's lifecycle, event times never decrease.
pub fn causality(trace: &SimTrace) -> Result<(), String> {
    let mut per_request: BTreeMap<u64, Vec<(u8, u64)>> = BTreeMap::new();
    for e in &trace.events {
        if let Some(rank) = lifecycle_rank(e.kind) {
            per_request
                .entry(e.request_id)
                .or_default()
                .push((rank, e.time_ns));
        }
    }
    for (id, mut chain) in per_request {
        chain.sort_by_key(|&(rank, _)| rank);
        if let Some(w) = chain.windows(2).find(|w| w[1].1 < w[0].1) {
            return Err(format!(
                "request {id}: stage {} at {} ns precedes stage {} at {} ns",
                w[1].0, w[1].1, w[0].0, w[0].1
            ));
        }
    }
    Ok(())
}

/// The cloud server starts each job exactly when both the job has fully
/// arrived and the previous job is done, so it never idles with work queued.
pub fn cloud_work_conservation(trace: &SimTrace) -> Result<(), String> {
    let p = &trace.params;
    let payload = match trace.framework {
        Framework::CloudOnly => p.concise_bytes,
        Framework::Synergy => p.comprehensive_bytes,
        Framework::Splitting => p.split_payload_bytes,
        Framework::Offload => return Ok(()),
    };
    let tx = tx_time_ns(payload, &p.edge_cloud);
    let mut arrival: BTreeMap<u64, u64> = BTreeMap::new();
    let mut done: BTreeMap<u64, u64> = BTreeMap::new();
    // jobs keyed by start time, in start order
    let mut jobs: Vec<(u64, Vec<u64>)> = Vec::new();
    for e in &trace.events {
        match e.kind {
            SimEventKind::ForwardStart => {
                arrival.insert(e.request_id, e.time_ns + tx);
            }
            SimEventKind::CloudDone => {
                done.insert(e.request_id, e.time_ns);
            }
            SimEventKind::CloudStart => match jobs.last_mut() {
                Some((t, ids)) if *t == e.time_ns => ids.push(e.request_id),
                _ => jobs.push((e.time_ns, vec![e.request_id])),
            },
            _ => {}
        }
    }
    let mut prev_done = 0u64;
    for (start, ids) in jobs {
        let ready = ids
            .iter()
            .map(|id| arrival.get(id).copied().ok_or(format!("request {id} never forwarded")))
            .collect::<Result<Vec<_>, _>>()?
            .into_iter()
            .max()
            .unwrap_or(0);
        let expected = ready.max(prev_done);
        if start != expected {
            return Err(format!(
                "cloud job {ids:?} started at {start} ns, expected {expected} ns \
                 (ready {ready}, server free {prev_done})"
            ));
        }
        prev_done = ids
            .iter()
            .map(|id| done.get(id).copied().ok_or(format!("request {id} never finished")))
            .collect::<Result<Vec<_>, _>>()?
            .into_iter()
            .max()
            .unwrap_or(start);
    }
    Ok(())
}

/// All structural invariants at once.
pub fn all(trace: &SimTrace) -> Result<(), String> {
    time_ordered(trace)?;
    conservation(trace)?;
    causality(trace)?;
    cloud_work_conservation(trace)
}
