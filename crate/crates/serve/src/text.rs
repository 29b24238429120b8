//! Keyword helpers shared by the mock backend, fact selection and corpus
//! generation.

use std::collections::BTreeSet;

const STOPWORDS: &[&str] = &[
    "a", "about", "an", "and", "are", "around", "at", "be", "by", "can", "do", "for", "from",
    "how", "i", "in", "is", "it", "its", "know", "like", "me", "more", "my", "near", "of", "on",
    "or", "some", "the", "to", "want", "what", "where", "which", "with", "would", "you",
];

/// Crude English stemmer: enough to match plurals against singulars.
pub fn stem(word: &str) -> String {
    let w = word.to_lowercase();
    if let Some(base) = w.strip_suffix("ies") {
        if base.len() >= 2 {
            return format!("{base}y");
        }
    }
    for suffix in ["ches", "shes", "sses", "xes"] {
        if let Some(base) = w.strip_suffix(suffix) {
            return format!("{base}{}", &suffix[..suffix.len() - 2]);
        }
    }
    if w.len() > 3 && w.ends_with('s') && !w.ends_with("ss") && !w.ends_with("us") {
        return w[..w.len() - 1].to_string();
    }
    w
}

/// Stemmed content words of `text`.
pub fn keywords(text: &str) -> BTreeSet<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty())
        .map(|w| w.to_lowercase())
        .filter(|w| !STOPWORDS.contains(&w.as_str()))
        .map(|w| stem(&w))
        .collect()
}

/// Share of `query` keywords found in `context`; 0 when `query` has none.
pub fn coverage(query: &str, context: &str) -> f64 {
    let q = keywords(query);
    if q.is_empty() {
        return 0.0;
    }
    let c = keywords(context);
    q.iter().filter(|w| c.contains(*w)).count() as f64 / q.len() as f64
}
