#![no_main]

use libfuzzer_sys::fuzz_target;
use synergy_core::netmgmt::{extract_intent_rules, parse_keyword_list};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let _ = parse_keyword_list(text);
    let _ = extract_intent_rules(text);
});
