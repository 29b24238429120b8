use std::path::{Path, PathBuf};

use crate::error::CliError;

pub mod client;
pub mod cost;
pub mod generate;
pub mod intent;
pub mod popularity;
pub mod serve;
pub mod simulate;

/// Where a command writes its files. The directory is created on first
/// write.
pub struct Output {
    dir: PathBuf,
}

impl Output {
    pub fn new(dir: PathBuf) -> Self {
        Output { dir }
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn write(&self, name: &str, contents: &str) -> Result<PathBuf, CliError> {
        let path = self.path(name);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)
                .map_err(|e| CliError::Config(format!("output dir {}: {e}", parent.display())))?;
        }
        std::fs::write(&path, contents).map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
        tracing::info!(path = %path.display(), "wrote");
        Ok(path)
    }
}

pub fn read_input(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::data(format!("{}: {e}", path.display())))
}

pub fn runtime() -> Result<tokio::runtime::Runtime, CliError> {
    tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(|e| CliError::Transport(format!("cannot start runtime: {e}")))
}
