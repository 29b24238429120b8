#![allow(dead_code)]

use std::path::PathBuf;
use std::sync::Arc;

use synergy_serve::backend::{Backend, BackendKind, GenerationSettings};
use synergy_serve::cloud::{AdapterRegistry, CloudService, RunningCloud};
use synergy_serve::corpus::synthetic_profiles;
use synergy_serve::edge::{EdgeSettings, RunningEdge};
use synergy_serve::profile::ProfileStore;

pub fn edge_settings(cloud_addr: &str) -> EdgeSettings {
    EdgeSettings {
        listen: "127.0.0.1:0".into(),
        metrics_listen: Some("127.0.0.1:0".into()),
        cloud_addr: cloud_addr.into(),
        profiles_dir: PathBuf::from("unused"),
        backend: BackendKind::Mock,
        dedup_ttl_s: 300.0,
        dedup_capacity: 10_000,
        batch_window_s: 0.01,
        max_batch: 32,
        termination_threshold: 0.9,
        request_timeout_s: 10.0,
    }
}

pub struct Pipeline {
    pub cloud: RunningCloud,
    pub edge: RunningEdge,
}

impl Pipeline {
    pub fn edge_addr(&self) -> String {
        self.edge.addr.to_string()
    }

    pub fn shutdown(self) {
        self.edge.shutdown();
        self.cloud.shutdown();
    }
}

pub async fn start_pipeline(completer: Arc<dyn Backend>, responder: Arc<dyn Backend>) -> Pipeline {
    start_pipeline_with(completer, responder, |_| {}).await
}

pub async fn start_pipeline_with(
    completer: Arc<dyn Backend>,
    responder: Arc<dyn Backend>,
    tweak: impl FnOnce(&mut EdgeSettings),
) -> Pipeline {
    let gen = GenerationSettings::default();
    let cloud = RunningCloud::start(
        "127.0.0.1:0",
        CloudService::new(responder, gen, AdapterRegistry::default()),
    )
    .await
    .unwrap();
    let mut settings = edge_settings(&cloud.addr.to_string());
    tweak(&mut settings);
    let profiles = ProfileStore::new(synthetic_profiles()).unwrap();
    let edge = RunningEdge::start(settings, gen, profiles, completer).await.unwrap();
    Pipeline { cloud, edge }
}
