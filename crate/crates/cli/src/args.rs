use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use synergy_core::cost_model::Framework;
use synergy_serve::backend::BackendKind;

#[derive(Debug, Parser)]
#[command(name = "synergy", version, about = "Cloud-edge LLM serving: cost reports, simulation, services and netmgmt pipelines")]
pub struct Cli {
    /// TOML config; the built-in defaults are used when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory; overrides `output.dir`.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Storage, VRAM and transmission comparison of the four frameworks.
    Cost {
        /// `all` or one framework name.
        #[arg(long, default_value = "all", value_parser = parse_framework_choice)]
        framework: FrameworkChoice,
    },
    /// Run the discrete-event latency simulation.
    Simulate(SimulateArgs),
    /// Run the edge or cloud service until interrupted.
    Serve(ServeArgs),
    /// Send concise prompts to an edge service.
    Client(ClientArgs),
    /// Popularity prediction over a viewing log.
    Popularity(PopularityArgs),
    /// Intent keyword extraction.
    Intent(IntentArgs),
    /// Write synthetic data files.
    Generate {
        #[command(subcommand)]
        what: GenerateCommand,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrameworkChoice {
    All,
    One(Framework),
}

impl FrameworkChoice {
    pub fn frameworks(self) -> Vec<Framework> {
        match self {
            FrameworkChoice::All => Framework::ALL.to_vec(),
            FrameworkChoice::One(f) => vec![f],
        }
    }
}

fn parse_framework_choice(s: &str) -> Result<FrameworkChoice, String> {
    if s.eq_ignore_ascii_case("all") {
        return Ok(FrameworkChoice::All);
    }
    s.parse().map(FrameworkChoice::One).map_err(|e: synergy_core::cost_model::CostError| e.to_string())
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Same as `--framework`.
    #[arg(value_parser = parse_framework_choice, conflicts_with = "framework")]
    pub which: Option<FrameworkChoice>,
    /// `cloud-only`, `synergy`, `splitting`, `offload` or `all` (the default).
    #[arg(long, value_parser = parse_framework_choice)]
    pub framework: Option<FrameworkChoice>,
    /// Number of requests; defaults to `sim.n_requests`.
    #[arg(long)]
    pub n: Option<u64>,
    /// Duplicate-selection seed; defaults to `sim.rng_seed`.
    #[arg(long)]
    pub seed: Option<u64>,
}

impl SimulateArgs {
    pub fn choice(&self) -> FrameworkChoice {
        self.which.or(self.framework).unwrap_or(FrameworkChoice::All)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Role {
    Edge,
    Cloud,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(value_enum)]
    pub role: Role,
    /// Defaults to `edge.listen` or `cloud.listen`.
    #[arg(long)]
    pub listen: Option<String>,
    /// `mock`, `echo`, `replay` or `http`; defaults to the role's configured backend.
    #[arg(long)]
    pub backend: Option<BackendKind>,
    /// Edge only: where the cloud service listens.
    #[arg(long)]
    pub cloud: Option<String>,
    /// Edge only: metrics listen address, or `off`.
    #[arg(long)]
    pub metrics: Option<String>,
}

#[derive(Debug, Args)]
pub struct ClientArgs {
    /// One prompt per line, optionally `bs_id<TAB>prompt`.
    #[arg(long)]
    pub send: PathBuf,
    /// Edge address; defaults to `edge.listen`.
    #[arg(long)]
    pub edge: Option<String>,
    /// Base station for lines without one.
    #[arg(long, default_value = "bs-001")]
    pub bs_id: String,
    /// Seconds to wait for all responses; defaults to `edge.request_timeout_s`.
    #[arg(long)]
    pub timeout: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PopularityMethod {
    Frequency,
    Markov1,
    Backend,
    All,
}

#[derive(Debug, Args)]
pub struct PopularityArgs {
    /// Viewing log with timestamp and title columns.
    #[arg(long)]
    pub csv: PathBuf,
    /// Defaults to `netmgmt.interval_hours`.
    #[arg(long)]
    pub interval_hours: Option<f64>,
    /// Defaults to `netmgmt.top_k`.
    #[arg(long)]
    pub top: Option<usize>,
    /// Train share; defaults to `netmgmt.split`.
    #[arg(long)]
    pub split: Option<f64>,
    #[arg(long, value_enum, default_value = "all")]
    pub method: PopularityMethod,
    /// Backend for `--method backend`; defaults to `edge.backend`.
    #[arg(long)]
    pub backend: Option<BackendKind>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Extractor {
    Rules,
    Backend,
}

#[derive(Debug, Args)]
pub struct IntentArgs {
    /// `utterance<TAB>slot:value...` lines to score.
    #[arg(long, required_unless_present = "utterance")]
    pub dataset: Option<PathBuf>,
    /// Extract from one utterance and print the keywords.
    #[arg(long, conflicts_with = "dataset")]
    pub utterance: Option<String>,
    #[arg(long, value_enum, default_value = "rules")]
    pub extractor: Extractor,
    /// Backend for `--extractor backend`; defaults to `edge.backend`.
    #[arg(long)]
    pub backend: Option<BackendKind>,
}

#[derive(Debug, Subcommand)]
pub enum GenerateCommand {
    /// Concise to comprehensive fine-tuning pairs.
    EdgeCorpus {
        #[arg(long, default_value_t = synergy_serve::corpus::DEFAULT_CORPUS_SIZE)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// One location profile per synthetic region, under `profiles/`.
    Profiles,
    /// Synthetic viewing log CSV.
    Viewing {
        #[arg(long, default_value_t = 200)]
        days: u32,
        #[arg(long, default_value_t = 5)]
        seed: u64,
        /// Unix seconds of the first record.
        #[arg(long, default_value_t = 1_600_000_000)]
        start: i64,
    },
    /// Synthetic intent dataset; size and seed default to `netmgmt.intent_*`.
    Intents {
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Record a replay corpus by running prompts through an in-process
    /// edge and cloud pair backed by the mock.
    Replay {
        #[arg(long)]
        send: PathBuf,
        #[arg(long, default_value = "bs-001")]
        bs_id: String,
    },
}
