#![no_main]

use libfuzzer_sys::fuzz_target;
use synergy_core::netmgmt::{parse_intent_dataset, render_intent_dataset};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(samples) = parse_intent_dataset(text) {
        let again = parse_intent_dataset(&render_intent_dataset(&samples)).expect("rendered dataset parses");
        assert_eq!(again, samples);
    }
});
