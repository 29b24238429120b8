//! The `synergy` command-line tool.

mod args;
mod commands;
mod error;
mod run_config;

pub use args::Cli;
pub use error::CliError;
pub use run_config::{OutputSection, RunConfig, BUILT_IN};

use args::Command;

pub fn run(cli: Cli) -> Result<(), CliError> {
    let mut cfg = RunConfig::load(cli.config.as_deref(), std::env::vars())?;
    if let Some(out) = cli.out {
        cfg.output.dir = out;
    }
    let out = commands::Output::new(cfg.output.dir.clone());
    match cli.command {
        Command::Cost { framework } => commands::cost::run(&cfg, &out, framework),
        Command::Simulate(a) => commands::simulate::run(&cfg, &out, &a),
        Command::Serve(a) => commands::serve::run(&cfg, &a),
        Command::Client(a) => commands::client::run(&cfg, &out, &a),
        Command::Popularity(a) => commands::popularity::run(&cfg, &out, &a),
        Command::Intent(a) => commands::intent::run(&cfg, &out, &a),
        Command::Generate { what } => commands::generate::run(&cfg, &out, what),
    }
}
