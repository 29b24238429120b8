use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cost_model::{Framework, LinkSpec};

use super::params::{secs_to_ns, tx_time_ns, SimError, SimParams};
use super::trace::{SimEvent, SimEventKind, SimTrace};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
enum Action {
    Issue(u64),
    /// Request reached its first serving node.
    Reach(u64),
    BatchTimeout(u64),
    EdgeFinish,
    CloudArrive { ids: Vec<u64>, service_ns: u64 },
    CloudFinish,
}

#[derive(Debug)]
struct Job {
    ids: Vec<u64>,
    service_ns: u64,
}

#[derive(Debug, Default)]
struct Server {
    queue: VecDeque<Job>,
    busy: Option<Job>,
}

#[derive(Debug)]
struct Link {
    spec: LinkSpec,
    free_at: u64,
}

impl Link {
    /// FIFO transmission; returns (start, done).
    fn send(&mut self, ready: u64, bytes: u64) -> (u64, u64) {
        let start = ready.max(self.free_at);
        let done = start + tx_time_ns(bytes, &self.spec);
        self.free_at = done;
        (start, done)
    }
}

#[derive(Debug)]
struct DupGroup {
    delivered_at: Option<u64>,
    waiters: Vec<u64>,
}

struct Sim<'a> {
    framework: Framework,
    p: &'a SimParams,
    now: u64,
    seq: u64,
    heap: BinaryHeap<Reverse<(u64, u64, Action)>>,
    log: Vec<(u64, u64, SimEventKind, u64)>,
    uplink: Link,
    edge_cloud: Link,
    edge: Server,
    cloud: Server,
    arrive_ns: Vec<u64>,
    done_ns: Vec<Option<u64>>,
    /// Representative of each request's duplicate group.
    origin: Vec<u64>,
    groups: HashMap<u64, DupGroup>,
    open_batch: Option<(u64, Vec<u64>)>,
    batches_opened: u64,
    conn_ready_at: Option<u64>,
    cloud_infer_ns: u64,
    edge_infer_ns: u64,
    handshake_ns: u64,
}

impl<'a> Sim<'a> {
    fn next_seq(&mut self) -> u64 {
        self.seq += 1;
        self.seq
    }

    fn schedule(&mut self, at: u64, action: Action) {
        let seq = self.next_seq();
        self.heap.push(Reverse((at, seq, action)));
    }

    fn record(&mut self, at: u64, kind: SimEventKind, id: u64) {
        let seq = self.next_seq();
        self.log.push((at, seq, kind, id));
    }

    fn run(&mut self) {
        while let Some(Reverse((at, _, action))) = self.heap.pop() {
            debug_assert!(at >= self.now);
            self.now = at;
            match action {
                Action::Issue(id) => self.issue(id),
                Action::Reach(id) => self.reach(id),
                Action::BatchTimeout(no) => {
                    if matches!(self.open_batch, Some((open, _)) if open == no) {
                        self.close_batch();
                    }
                }
                Action::EdgeFinish => self.edge_finish(),
                Action::CloudArrive { ids, service_ns } => {
                    self.cloud.queue.push_back(Job { ids, service_ns });
                    self.try_start_cloud();
                }
                Action::CloudFinish => self.cloud_finish(),
            }
        }
    }

    fn issue(&mut self, id: u64) {
        self.record(self.now, SimEventKind::Arrive, id);
        let bytes = self.p.concise_bytes;
        let done = if self.framework == Framework::CloudOnly {
            // straight to the cloud over its own connection
            let (start, done) = self.edge_cloud.send(self.now, bytes);
            self.record(start, SimEventKind::ForwardStart, id);
            done
        } else {
            self.uplink.send(self.now, bytes).1
        };
        self.schedule(done, Action::Reach(id));
    }

    fn reach(&mut self, id: u64) {
        match self.framework {
            Framework::CloudOnly => {
                self.cloud.queue.push_back(Job {
                    ids: vec![id],
                    service_ns: self.handshake_ns + self.cloud_infer_ns,
                });
                self.try_start_cloud();
            }
            Framework::Offload => {
                self.edge.queue.push_back(Job {
                    ids: vec![id],
                    service_ns: self.edge_infer_ns,
                });
                self.try_start_edge();
            }
            Framework::Splitting => {
                let service_ns = (self.cloud_infer_ns as f64 * self.p.split_fraction).round() as u64;
                self.edge.queue.push_back(Job {
                    ids: vec![id],
                    service_ns,
                });
                self.try_start_edge();
            }
            Framework::Synergy => {
                let root = self.origin[id as usize];
                match self.groups.get_mut(&root) {
                    None => {
                        self.groups.insert(
                            root,
                            DupGroup {
                                delivered_at: None,
                                waiters: Vec::new(),
                            },
                        );
                        self.batch_add(id);
                    }
                    Some(g) => match g.delivered_at {
                        Some(_) => {
                            self.done_ns[id as usize] = Some(self.now);
                            self.record(self.now, SimEventKind::DedupHit, id);
                        }
                        None => g.waiters.push(id),
                    },
                }
            }
        }
    }

    fn batch_add(&mut self, id: u64) {
        if self.open_batch.is_none() {
            let no = self.batches_opened;
            self.batches_opened += 1;
            self.open_batch = Some((no, Vec::new()));
            let deadline = self.now + secs_to_ns(self.p.batch_window_s);
            self.schedule(deadline, Action::BatchTimeout(no));
        }
        let (_, ids) = self.open_batch.as_mut().expect("just opened");
        ids.push(id);
        if ids.len() as u64 >= self.p.max_batch {
            self.close_batch();
        }
    }

    fn close_batch(&mut self) {
        let (_, ids) = self.open_batch.take().expect("open batch");
        let service_ns = self.edge_infer_ns * ids.len() as u64;
        self.edge.queue.push_back(Job { ids, service_ns });
        self.try_start_edge();
    }

    fn try_start_edge(&mut self) {
        if self.edge.busy.is_some() {
            return;
        }
        let Some(job) = self.edge.queue.pop_front() else {
            return;
        };
        for &id in &job.ids {
            self.record(self.now, SimEventKind::EdgeBatchStart, id);
        }
        self.schedule(self.now + job.service_ns, Action::EdgeFinish);
        self.edge.busy = Some(job);
    }

    fn edge_finish(&mut self) {
        let job = self.edge.busy.take().expect("edge busy");
        for &id in &job.ids {
            self.record(self.now, SimEventKind::EdgeDone, id);
        }
        match self.framework {
            Framework::Offload => self.deliver(&job.ids),
            Framework::Splitting => {
                let remaining = self.cloud_infer_ns as f64 * (1.0 - self.p.split_fraction);
                self.forward(job.ids, self.p.split_payload_bytes, remaining.round() as u64);
            }
            Framework::Synergy => {
                let per = self.cloud_infer_ns as f64 / self.p.cloud_batch_speedup;
                let service = (per * job.ids.len() as f64).round() as u64;
                self.forward(job.ids, self.p.comprehensive_bytes, service);
            }
            Framework::CloudOnly => unreachable!("cloud-only never uses the edge"),
        }
        self.try_start_edge();
    }

    /// Sends `ids` over the persistent edge-cloud connection, opening it on
    /// first use.
    fn forward(&mut self, ids: Vec<u64>, bytes: u64, service_ns: u64) {
        let ready = match self.conn_ready_at {
            Some(t) => t,
            None => {
                let t = self.now + self.handshake_ns;
                self.record(t, SimEventKind::HandshakeDone, ids[0]);
                self.conn_ready_at = Some(t);
                t
            }
        };
        let mut last = ready.max(self.now);
        for &id in &ids {
            let (start, done) = self.edge_cloud.send(ready.max(self.now), bytes);
            self.record(start, SimEventKind::ForwardStart, id);
            last = done;
        }
        self.schedule(last, Action::CloudArrive { ids, service_ns });
    }

    fn try_start_cloud(&mut self) {
        if self.cloud.busy.is_some() {
            return;
        }
        let Some(job) = self.cloud.queue.pop_front() else {
            return;
        };
        for &id in &job.ids {
            self.record(self.now, SimEventKind::CloudStart, id);
            if self.framework == Framework::CloudOnly {
                // per-connection setup occupies the server before inference
                self.record(self.now + self.handshake_ns, SimEventKind::HandshakeDone, id);
            }
        }
        self.schedule(self.now + job.service_ns, Action::CloudFinish);
        self.cloud.busy = Some(job);
    }

    fn cloud_finish(&mut self) {
        let job = self.cloud.busy.take().expect("cloud busy");
        for &id in &job.ids {
            self.record(self.now, SimEventKind::CloudDone, id);
        }
        self.deliver(&job.ids);
        self.try_start_cloud();
    }

    fn deliver(&mut self, ids: &[u64]) {
        for &id in ids {
            self.done_ns[id as usize] = Some(self.now);
            self.record(self.now, SimEventKind::Deliver, id);
            if self.framework == Framework::Synergy {
                let root = self.origin[id as usize];
                let group = self.groups.get_mut(&root).expect("group exists");
                group.delivered_at = Some(self.now);
                let waiters = std::mem::take(&mut group.waiters);
                for w in waiters {
                    self.done_ns[w as usize] = Some(self.now);
                    self.record(self.now, SimEventKind::DedupHit, w);
                }
            }
        }
    }
}

/// Each request is, with probability `f`, a copy of a uniformly chosen
/// earlier request; returns the group representative per request.
fn duplicate_groups(n: u64, f: f64, rng: &mut ChaCha8Rng) -> Vec<u64> {
    let mut origin = Vec::with_capacity(n as usize);
    for i in 0..n {
        let copy = i > 0 && rng.gen::<f64>() < f;
        if copy {
            let j = rng.gen_range(0..i);
            origin.push(origin[j as usize]);
        } else {
            origin.push(i);
        }
    }
    origin
}

/// Runs one workload under `framework`.
pub fn simulate(framework: Framework, p: &SimParams) -> Result<SimTrace, SimError> {
    p.validate()?;
    if framework == Framework::Splitting && !(p.split_fraction > 0.0 && p.split_fraction < 1.0) {
        return Err(SimError::InvalidParam {
            field: "split_fraction",
            reason: "splitting requires 0 < split_fraction < 1".into(),
        });
    }
    let n = p.n_requests;
    let mut rng = ChaCha8Rng::seed_from_u64(p.rng_seed);
    let origin = duplicate_groups(n, p.duplicate_fraction, &mut rng);
    let mut jitter_rng = ChaCha8Rng::seed_from_u64(p.rng_seed);
    jitter_rng.set_stream(1);
    let jitter_ns = secs_to_ns(p.arrival_jitter_s);
    let arrive_ns: Vec<u64> = (0..n)
        .map(|_| {
            if jitter_ns == 0 {
                0
            } else {
                jitter_rng.gen_range(0..=jitter_ns)
            }
        })
        .collect();

    let mut sim = Sim {
        framework,
        p,
        now: 0,
        seq: 0,
        heap: BinaryHeap::new(),
        log: Vec::new(),
        uplink: Link {
            spec: p.end_edge,
            free_at: 0,
        },
        edge_cloud: Link {
            spec: p.edge_cloud,
            free_at: 0,
        },
        edge: Server::default(),
        cloud: Server::default(),
        arrive_ns: arrive_ns.clone(),
        done_ns: vec![None; n as usize],
        origin,
        groups: HashMap::new(),
        open_batch: None,
        batches_opened: 0,
        conn_ready_at: None,
        cloud_infer_ns: secs_to_ns(p.cloud_infer_s_per_request),
        edge_infer_ns: secs_to_ns(p.edge_infer_s_per_request),
        handshake_ns: secs_to_ns(p.edge_cloud.per_request_handshake_s),
    };
    for id in 0..n {
        sim.schedule(arrive_ns[id as usize], Action::Issue(id));
    }
    sim.run();

    let mut log = std::mem::take(&mut sim.log);
    log.sort_unstable_by_key(|&(t, seq, _, _)| (t, seq));
    let events: Vec<SimEvent> = log
        .into_iter()
        .map(|(time_ns, _, kind, request_id)| SimEvent {
            time_ns,
            kind,
            request_id,
        })
        .collect();
    let per_request_latency_ns: Vec<u64> = sim
        .done_ns
        .iter()
        .zip(&sim.arrive_ns)
        .map(|(done, arrive)| done.expect("every request completes") - arrive)
        .collect();
    let end_to_end_ns = events.last().map_or(0, |e| e.time_ns);

    Ok(SimTrace {
        framework,
        params: p.clone(),
        events,
        end_to_end_ns,
        per_request_latency_ns,
    })
}
