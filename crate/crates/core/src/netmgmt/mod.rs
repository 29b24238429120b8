//! Network-management pipelines run by the edge: content popularity
//! prediction over bucketed viewing logs, and intent keyword extraction.

mod intent;
mod popularity;
mod template;

pub use intent::{
    canonical_bandwidth, extract_intent_rules, generate_intent_corpus, parse_intent_dataset,
    parse_keyword_list, render_intent_dataset, render_keyword_list, score_intents, IntentError,
    IntentSample, IntentScore, KeywordSet, Slot,
};
pub use popularity::{
    bucketize, generate_viewing_records, load_viewing_csv, predict_baseline, score,
    split_train_test, write_viewing_csv, Baseline, IntervalDataset, NetError, PopularityScore,
    ViewingRecord, Window, HALF_YEAR_S,
};
pub use template::{
    parse_template, parse_template_line, render_template, render_template_line, TemplateEntry,
    TemplateError, BLOCK_BEGIN, BLOCK_END,
};
