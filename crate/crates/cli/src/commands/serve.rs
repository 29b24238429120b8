use std::io::Write;
use std::sync::Arc;

use synergy_core::protocol::validate_workflow;
use synergy_serve::backend::{build_backend, Backend, BackendKind, BuildError};
use synergy_serve::cloud::{load_adapters, AdapterRegistry, CloudService, RunningCloud};
use synergy_serve::edge::RunningEdge;
use synergy_serve::profile::ProfileStore;

use crate::args::{Role, ServeArgs};
use crate::commands::runtime;
use crate::error::CliError;
use crate::run_config::RunConfig;

pub fn backend(cfg: &RunConfig, kind: BackendKind) -> Result<Arc<dyn Backend>, CliError> {
    build_backend(kind, &cfg.backend, &cfg.base_dir).map_err(|e| match e {
        BuildError::Replay(_) => CliError::data(e),
        _ => CliError::config(e),
    })
}

fn announce(line: String) {
    let mut stdout = std::io::stdout().lock();
    let _ = writeln!(stdout, "{line}");
    let _ = stdout.flush();
}

pub fn run(cfg: &RunConfig, args: &ServeArgs) -> Result<(), CliError> {
    // RunConfig::load already rejects bad graphs; kept for configs built in code
    validate_workflow(&cfg.core.workflow).map_err(|v| CliError::config(format!("workflow: {v:?}")))?;
    let rt = runtime()?;
    match args.role {
        Role::Cloud => {
            let mut settings = cfg.cloud.clone();
            if let Some(l) = &args.listen {
                settings.listen = l.clone();
            }
            let responder = backend(cfg, args.backend.unwrap_or(settings.backend))?;
            let mut registry = AdapterRegistry::new(
                [cfg.core.models.cloud.clone(), cfg.core.models.edge.clone()],
                cfg.core.lora.adapter_bytes_per_param,
            );
            if let Some(path) = &settings.adapters_file {
                let n = load_adapters(&cfg.resolve(path), &mut registry).map_err(CliError::data)?;
                tracing::info!(adapters = n, "adapters registered");
            }
            let service = CloudService::new(responder, cfg.generation, registry);
            rt.block_on(async {
                let running = RunningCloud::start(&settings.listen, service)
                    .await
                    .map_err(|e| CliError::transport(format!("bind {}: {e}", settings.listen)))?;
                announce(format!("cloud listening on {}", running.addr));
                let _ = tokio::signal::ctrl_c().await;
                running.shutdown();
                Ok(())
            })
        }
        Role::Edge => {
            let mut settings = cfg.edge.clone();
            if let Some(l) = &args.listen {
                settings.listen = l.clone();
            }
            if let Some(c) = &args.cloud {
                settings.cloud_addr = c.clone();
            }
            match args.metrics.as_deref() {
                Some("off") => settings.metrics_listen = None,
                Some(m) => settings.metrics_listen = Some(m.to_string()),
                None => {}
            }
            let completer = backend(cfg, args.backend.unwrap_or(settings.backend))?;
            let profiles = ProfileStore::load_dir(&cfg.resolve(&settings.profiles_dir)).map_err(CliError::data)?;
            tracing::info!(profiles = profiles.len(), "profiles loaded");
            rt.block_on(async {
                let running = RunningEdge::start(settings, cfg.generation, profiles, completer)
                    .await
                    .map_err(|e| CliError::transport(format!("bind: {e}")))?;
                announce(format!("edge listening on {}", running.addr));
                if let Some(m) = running.metrics_addr {
                    announce(format!("edge metrics on {m}"));
                }
                let _ = tokio::signal::ctrl_c().await;
                running.shutdown();
                Ok(())
            })
        }
    }
}
