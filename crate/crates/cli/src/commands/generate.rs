use std::collections::BTreeMap;
use std::sync::Arc;
use std::time::Duration;

use synergy_core::netmgmt::{generate_intent_corpus, generate_viewing_records, render_intent_dataset, write_viewing_csv};
use synergy_serve::backend::{render_replay_corpus, Backend, MockBackend, RecordingBackend};
use synergy_serve::client::{parse_prompt_file, send_prompts};
use synergy_serve::cloud::{AdapterRegistry, CloudService, RunningCloud};
use synergy_serve::corpus::{generate_corpus, render_corpus, synthetic_profiles};
use synergy_serve::edge::RunningEdge;
use synergy_serve::profile::{render_profile, ProfileStore};

use crate::args::GenerateCommand;
use crate::commands::{read_input, runtime, Output};
use crate::error::CliError;
use crate::run_config::RunConfig;

pub fn run(cfg: &RunConfig, out: &Output, what: GenerateCommand) -> Result<(), CliError> {
    match what {
        GenerateCommand::EdgeCorpus { n, seed } => {
            let path = out.write("edge_corpus.tsv", &render_corpus(&generate_corpus(seed, n)))?;
            println!("{n} samples -> {}", path.display());
        }
        GenerateCommand::Profiles => {
            for p in synthetic_profiles() {
                let path = out.write(&format!("profiles/{}.toml", p.bs_id), &render_profile(&p))?;
                println!("{}", path.display());
            }
        }
        GenerateCommand::Viewing { days, seed, start } => {
            let records = generate_viewing_records(seed, days, start);
            let mut buf = Vec::new();
            write_viewing_csv(&mut buf, &records).map_err(CliError::data)?;
            let text = String::from_utf8(buf).expect("csv writer emits UTF-8");
            let path = out.write("viewing_synthetic.csv", &text)?;
            println!("{} records -> {}", records.len(), path.display());
        }
        GenerateCommand::Intents { n, seed } => {
            let n = n.unwrap_or(cfg.core.netmgmt.intent_samples);
            let seed = seed.unwrap_or(cfg.core.netmgmt.intent_seed);
            let mut text = String::from("# utterance<TAB>slot:value ...\n");
            text.push_str(&render_intent_dataset(&generate_intent_corpus(seed, n)));
            let path = out.write("intent_corpus.tsv", &text)?;
            println!("{n} samples -> {}", path.display());
        }
        GenerateCommand::Replay { send, bs_id } => {
            let prompts = parse_prompt_file(&read_input(&send)?, &bs_id);
            if prompts.is_empty() {
                return Err(CliError::data(format!("{}: no prompts", send.display())));
            }
            let profiles =
                ProfileStore::load_dir(&cfg.resolve(&cfg.edge.profiles_dir)).map_err(CliError::data)?;
            let mock: Arc<dyn Backend> = Arc::new(MockBackend::new(cfg.backend.mock.clone()));
            let completer = Arc::new(RecordingBackend::new(mock.clone()));
            let responder = Arc::new(RecordingBackend::new(mock));
            let mut settings = cfg.edge.clone();
            settings.listen = "127.0.0.1:0".into();
            settings.metrics_listen = None;
            let gen = cfg.generation;
            let responses = runtime()?.block_on(async {
                let cloud = RunningCloud::start(
                    "127.0.0.1:0",
                    CloudService::new(responder.clone(), gen, AdapterRegistry::default()),
                )
                .await
                .map_err(CliError::transport)?;
                settings.cloud_addr = cloud.addr.to_string();
                let edge = RunningEdge::start(settings, gen, profiles, completer.clone())
                    .await
                    .map_err(CliError::transport)?;
                let res = send_prompts(&edge.addr.to_string(), &prompts, Duration::from_secs(30)).await;
                edge.shutdown();
                cloud.shutdown();
                res.map_err(CliError::transport)
            })?;
            let mut merged = BTreeMap::new();
            for e in completer.entries().into_iter().chain(responder.entries()) {
                merged.entry(e.prompt.clone()).or_insert(e);
            }
            let entries: Vec<_> = merged.into_values().collect();
            let mut text = String::from("# prompt<TAB>completion<TAB>confidence, recorded from the mock backend\n");
            text.push_str(&render_replay_corpus(&entries));
            let path = out.write("replay_corpus.tsv", &text)?;
            println!(
                "{} prompts, {} responses, {} recorded generations -> {}",
                prompts.len(),
                responses.len(),
                entries.len(),
                path.display()
            );
        }
    }
    Ok(())
}
