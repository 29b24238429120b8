#![no_main]

use libfuzzer_sys::fuzz_target;
use synergy_core::config::{parse_document, CoreConfig};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(doc) = parse_document(text) {
        if let Ok(cfg) = CoreConfig::from_document(&doc) {
            let _ = cfg.cost_report(&synergy_core::cost_model::Framework::ALL);
        }
    }
});
