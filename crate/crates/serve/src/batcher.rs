//! Grouping of forwarded prompts into cloud batches.
//!
//! A batch opens with its first item and closes when it holds `max_batch`
//! items or when `window` has elapsed since it opened, whichever is first.

use std::time::Duration;

use tokio::sync::mpsc;
use tokio::time::{timeout_at, Instant};

#[derive(Debug, Clone, PartialEq)]
pub struct Batch<T> {
    pub items: Vec<T>,
    /// Time the batch was handed on.
    pub closed_at: f64,
}

/// Offline form of the batching rule over time-stamped items (seconds,
/// non-decreasing).
///
/// # Panics
/// If `max_batch` is 0.
pub fn batch_forward<T: Clone>(pending: &[(f64, T)], window_s: f64, max_batch: usize) -> Vec<Batch<T>> {
    assert!(max_batch > 0, "max_batch must be >= 1");
    let mut out = Vec::new();
    let mut open: Option<(f64, Vec<T>)> = None;
    for (t, item) in pending {
        if matches!(&open, Some((start, _)) if *t >= start + window_s) {
            let (start, items) = open.take().expect("checked above");
            out.push(Batch {
                items,
                closed_at: start + window_s,
            });
        }
        let (_, items) = open.get_or_insert_with(|| (*t, Vec::new()));
        items.push(item.clone());
        if items.len() == max_batch {
            let (_, items) = open.take().expect("just inserted");
            out.push(Batch { items, closed_at: *t });
        }
    }
    if let Some((start, items)) = open {
        out.push(Batch {
            items,
            closed_at: start + window_s,
        });
    }
    out
}

/// Runs the batching rule on a live stream. Items sent on the returned
/// sender come out grouped on the returned receiver; the task ends once
/// every sender is dropped and the last batch is delivered.
///
/// # Panics
/// If `max_batch` is 0.
pub fn spawn_batcher<T: Send + 'static>(
    window: Duration,
    max_batch: usize,
) -> (mpsc::UnboundedSender<T>, mpsc::Receiver<Vec<T>>) {
    assert!(max_batch > 0, "max_batch must be >= 1");
    let (tx, mut rx) = mpsc::unbounded_channel::<T>();
    let (out_tx, out_rx) = mpsc::channel(16);
    tokio::spawn(async move {
        while let Some(first) = rx.recv().await {
            let deadline = Instant::now() + window;
            let mut batch = vec![first];
            while batch.len() < max_batch {
                match timeout_at(deadline, rx.recv()).await {
                    Ok(Some(item)) => batch.push(item),
                    Ok(None) | Err(_) => break,
                }
            }
            if out_tx.send(batch).await.is_err() {
                break;
            }
        }
    });
    (tx, out_rx)
}
