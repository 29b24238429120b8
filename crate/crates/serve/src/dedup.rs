//! Edge de-duplication cache.
//!
//! Keys are [`DedupKey`]s, so two distinct texts whose normalized forms
//! hash alike are treated as duplicates. Time is passed in by the caller as
//! seconds on any monotonic clock.

use std::collections::{BTreeMap, HashMap};

use synergy_core::protocol::DedupKey;

/// Outcome of a lookup. Tickets identify the leader request that owns an
/// entry; they are chosen by the caller and must be unique.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Lookup {
    /// First sighting; the caller's ticket now leads the entry.
    Fresh,
    /// An earlier request with this ticket is still being answered.
    DuplicateOf(u64),
    Cached(String),
}

#[derive(Debug, Clone)]
enum State {
    Pending { leader: u64 },
    Done(String),
}

#[derive(Debug, Clone)]
struct Entry {
    state: State,
    inserted_at: f64,
    seq: u64,
}

#[derive(Debug, Clone)]
pub struct DedupCache {
    ttl_s: f64,
    capacity: usize,
    entries: HashMap<DedupKey, Entry>,
    // insertion order, for oldest-first eviction
    order: BTreeMap<u64, DedupKey>,
    next_seq: u64,
}

impl DedupCache {
    /// # Panics
    /// If `capacity` is 0 or `ttl_s` is not positive.
    pub fn new(ttl_s: f64, capacity: usize) -> Self {
        assert!(capacity > 0, "dedup capacity must be >= 1");
        assert!(ttl_s > 0.0, "dedup ttl must be positive");
        DedupCache {
            ttl_s,
            capacity,
            entries: HashMap::new(),
            order: BTreeMap::new(),
            next_seq: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn lookup(&mut self, key: DedupKey, ticket: u64, now: f64) -> Lookup {
        if let Some(e) = self.entries.get(&key) {
            if now - e.inserted_at < self.ttl_s {
                return match &e.state {
                    State::Pending { leader } => Lookup::DuplicateOf(*leader),
                    State::Done(text) => Lookup::Cached(text.clone()),
                };
            }
            self.remove(key);
        }
        self.insert(key, ticket, now);
        Lookup::Fresh
    }

    /// Stores the leader's response. Ignored if the entry has since been
    /// evicted, expired or taken over by another leader.
    pub fn complete(&mut self, key: DedupKey, ticket: u64, response: impl Into<String>) {
        if let Some(e) = self.entries.get_mut(&key) {
            if matches!(e.state, State::Pending { leader } if leader == ticket) {
                e.state = State::Done(response.into());
            }
        }
    }

    /// Drops a pending entry whose leader failed, so the next arrival
    /// retries.
    pub fn abandon(&mut self, key: DedupKey, ticket: u64) {
        if matches!(
            self.entries.get(&key),
            Some(Entry { state: State::Pending { leader }, .. }) if *leader == ticket
        ) {
            self.remove(key);
        }
    }

    fn insert(&mut self, key: DedupKey, ticket: u64, now: f64) {
        while self.entries.len() >= self.capacity {
            let (_, oldest) = self.order.pop_first().expect("order tracks entries");
            self.entries.remove(&oldest);
        }
        let seq = self.next_seq;
        self.next_seq += 1;
        self.order.insert(seq, key);
        self.entries.insert(
            key,
            Entry {
                state: State::Pending { leader: ticket },
                inserted_at: now,
                seq,
            },
        );
    }

    fn remove(&mut self, key: DedupKey) {
        if let Some(e) = self.entries.remove(&key) {
            self.order.remove(&e.seq);
        }
    }
}
