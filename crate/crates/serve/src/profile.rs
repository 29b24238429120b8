//! Per-base-station location profiles.
//!
//! One TOML file per base station:
//!
//! ```toml
//! bs_id = "bs-001"
//! region_name = "Riverside"
//! max_facts_per_prompt = 1
//! facts = ["The city library holds rare collections."]
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::text::keywords;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LocationProfile {
    pub bs_id: String,
    pub region_name: String,
    pub facts: Vec<String>,
    #[serde(default = "one")]
    pub max_facts_per_prompt: usize,
}

fn one() -> usize {
    1
}

#[derive(Debug, Error)]
pub enum ProfileError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {reason}")]
    Parse { path: PathBuf, reason: String },
    #[error("profile {bs_id}: {reason}")]
    Invalid { bs_id: String, reason: String },
    #[error("bs_id {0} is defined twice")]
    Duplicate(String),
}

impl LocationProfile {
    /// Profile used for base stations with no registered profile.
    pub fn fallback(bs_id: &str) -> Self {
        LocationProfile {
            bs_id: bs_id.to_string(),
            region_name: String::new(),
            facts: Vec::new(),
            max_facts_per_prompt: 0,
        }
    }

    pub fn validate(&self) -> Result<(), ProfileError> {
        let invalid = |reason: String| ProfileError::Invalid {
            bs_id: self.bs_id.clone(),
            reason,
        };
        if self.bs_id.trim().is_empty() {
            return Err(invalid("empty bs_id".into()));
        }
        if self.region_name.trim().is_empty() || self.region_name.contains('\n') {
            return Err(invalid("region_name must be one nonempty line".into()));
        }
        if self.facts.is_empty() {
            return Err(invalid("facts must be nonempty".into()));
        }
        for f in &self.facts {
            if !is_single_sentence(f) {
                return Err(invalid(format!("fact {f:?} is not a single sentence")));
            }
        }
        Ok(())
    }

    /// Facts sharing the most keywords with `concise`, best first, at most
    /// `max_facts_per_prompt`. Facts with no shared keyword are never
    /// chosen; ties keep file order.
    pub fn select_facts(&self, concise: &str) -> Vec<&str> {
        let wanted = keywords(concise);
        let mut scored: Vec<(usize, usize, &str)> = self
            .facts
            .iter()
            .enumerate()
            .map(|(i, f)| (keywords(f).intersection(&wanted).count(), i, f.as_str()))
            .filter(|(overlap, _, _)| *overlap > 0)
            .collect();
        scored.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
        scored
            .into_iter()
            .take(self.max_facts_per_prompt)
            .map(|(_, _, f)| f)
            .collect()
    }
}

/// One line ending in `.`, `!` or `?` with no earlier sentence break.
fn is_single_sentence(text: &str) -> bool {
    let t = text.trim();
    !t.is_empty()
        && !t.contains(['\n', '\r'])
        && t.ends_with(['.', '!', '?'])
        && !t[..t.len() - 1].contains(". ")
}

#[derive(Debug, Clone, Default)]
pub struct ProfileStore {
    profiles: BTreeMap<String, LocationProfile>,
}

impl ProfileStore {
    pub fn new(profiles: impl IntoIterator<Item = LocationProfile>) -> Result<Self, ProfileError> {
        let mut store = ProfileStore::default();
        for p in profiles {
            p.validate()?;
            if store.profiles.contains_key(&p.bs_id) {
                return Err(ProfileError::Duplicate(p.bs_id));
            }
            store.profiles.insert(p.bs_id.clone(), p);
        }
        Ok(store)
    }

    /// Loads every `*.toml` file in `dir`.
    pub fn load_dir(dir: &Path) -> Result<Self, ProfileError> {
        let io = |source| ProfileError::Io {
            path: dir.to_path_buf(),
            source,
        };
        let mut paths = Vec::new();
        for entry in std::fs::read_dir(dir).map_err(io)? {
            let path = entry.map_err(io)?.path();
            if path.extension().is_some_and(|e| e == "toml") {
                paths.push(path);
            }
        }
        paths.sort();
        let mut profiles = Vec::with_capacity(paths.len());
        for path in paths {
            let text = std::fs::read_to_string(&path).map_err(|source| ProfileError::Io {
                path: path.clone(),
                source,
            })?;
            profiles.push(parse_profile(&text).map_err(|reason| ProfileError::Parse { path, reason })?);
        }
        Self::new(profiles)
    }

    pub fn get(&self, bs_id: &str) -> Option<&LocationProfile> {
        self.profiles.get(bs_id)
    }

    pub fn len(&self) -> usize {
        self.profiles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.profiles.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &LocationProfile> {
        self.profiles.values()
    }
}

pub fn parse_profile(text: &str) -> Result<LocationProfile, String> {
    toml::from_str(text).map_err(|e| e.message().to_string())
}

pub fn render_profile(p: &LocationProfile) -> String {
    toml::to_string(p).expect("profile serializes")
}
