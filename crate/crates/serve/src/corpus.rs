//! Synthetic location profiles and edge fine-tuning corpora.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::backend::{EnhancementPrompt, GenerationRequest, MockBackend, MockSettings};
use crate::profile::LocationProfile;

/// A concise prompt and the comprehensive prompt it should become.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeFineTuneSample {
    pub concise: String,
    pub intended: String,
    pub bs_id: String,
}

pub const DEFAULT_CORPUS_SIZE: usize = 4000;

const REGIONS: [(&str, &str); 5] = [
    ("bs-001", "Riverside"),
    ("bs-002", "Hillcrest"),
    ("bs-003", "Lakeview"),
    ("bs-004", "Old Town"),
    ("bs-005", "Harbor Point"),
];

struct Topic {
    requests: &'static [&'static str],
    facts: &'static [&'static str],
}

const TOPICS: [Topic; 12] = [
    Topic {
        requests: &["best libraries", "quiet libraries", "open libraries"],
        facts: &[
            "The city library holds rare collections.",
            "The west library opens until ten.",
            "A small library sits by the canal.",
        ],
    },
    Topic {
        requests: &["quiet parks", "dog parks", "green parks"],
        facts: &[
            "Two quiet parks line the river.",
            "The dog park has a water fountain.",
            "Elm park hosts weekend picnics.",
        ],
    },
    Topic {
        requests: &["cheap cafes", "cozy cafes", "late cafes"],
        facts: &[
            "The corner cafe serves cheap lunches.",
            "A cozy cafe faces the harbor.",
            "Night owls like the late cafe.",
        ],
    },
    Topic {
        requests: &["art museums", "free museums"],
        facts: &[
            "The art museum is free on Sundays.",
            "A history museum fills the old mill.",
        ],
    },
    Topic {
        requests: &["night markets", "food markets"],
        facts: &["The night market opens at dusk.", "A food market runs on Saturdays."],
    },
    Topic {
        requests: &["open gyms", "cheap gyms"],
        facts: &["The public gym stays open late.", "A cheap gym sits near the station."],
    },
    Topic {
        requests: &["fresh bakeries", "bakeries"],
        facts: &["The bakery sells fresh rye at seven.", "A family bakery bakes sourdough daily."],
    },
    Topic {
        requests: &["city pools", "indoor pools"],
        facts: &["The city pool has six lanes.", "An indoor pool opens year round."],
    },
    Topic {
        requests: &["live music", "jazz music"],
        facts: &[
            "Live music plays at the pier on Fridays.",
            "A jazz club books live music nightly.",
        ],
    },
    Topic {
        requests: &["walk-in clinics", "night clinics"],
        facts: &[
            "A walk-in clinic sits on Main Street.",
            "The night clinic treats minor injuries.",
        ],
    },
    Topic {
        requests: &["sandy beaches", "quiet beaches"],
        facts: &[
            "The sandy beach has lifeguards in summer.",
            "A quiet beach lies past the lighthouse.",
        ],
    },
    Topic {
        requests: &["bus stations", "train stations"],
        facts: &[
            "The train station links to the airport.",
            "The bus station runs hourly night buses.",
        ],
    },
];

/// One profile per synthetic region; region `i` takes fact variant `i` of
/// every topic (modulo the number of variants).
pub fn synthetic_profiles() -> Vec<LocationProfile> {
    REGIONS
        .iter()
        .enumerate()
        .map(|(i, (bs, region))| LocationProfile {
            bs_id: bs.to_string(),
            region_name: region.to_string(),
            facts: TOPICS
                .iter()
                .map(|t| t.facts[i % t.facts.len()].to_string())
                .collect(),
            max_facts_per_prompt: 1,
        })
        .collect()
}

/// Every concise request the generator can emit.
pub fn concise_vocabulary() -> Vec<&'static str> {
    TOPICS.iter().flat_map(|t| t.requests.iter().copied()).collect()
}

/// `n` samples drawn with a seeded generator. The intended text is what
/// the deterministic mock completer makes of the concise prompt.
pub fn generate_corpus(seed: u64, n: usize) -> Vec<EdgeFineTuneSample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let profiles = synthetic_profiles();
    let mock = MockBackend::new(MockSettings::default());
    let vocab = concise_vocabulary();
    (0..n)
        .map(|_| {
            let profile = profiles.choose(&mut rng).expect("regions exist");
            let concise = vocab.choose(&mut rng).expect("topics exist").to_string();
            let prompt = EnhancementPrompt {
                region: profile.region_name.clone(),
                facts: profile.select_facts(&concise).into_iter().map(String::from).collect(),
                request: concise.clone(),
            };
            let intended = mock
                .complete(&GenerationRequest::new(prompt.render(), 128, 0.0))
                .expect("mock accepts rendered prompts")
                .text;
            EdgeFineTuneSample {
                concise,
                intended,
                bs_id: profile.bs_id.clone(),
            }
        })
        .collect()
}

/// `bs_id TAB concise TAB intended`, one sample per line.
pub fn render_corpus(samples: &[EdgeFineTuneSample]) -> String {
    let mut out = String::from("# bs_id\tconcise\tintended\n");
    for s in samples {
        out.push_str(&format!("{}\t{}\t{}\n", s.bs_id, s.concise, s.intended));
    }
    out
}
