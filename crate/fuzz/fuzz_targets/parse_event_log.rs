#![no_main]

use libfuzzer_sys::fuzz_target;
use synergy_core::latency_sim::parse_event_log;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        let _ = parse_event_log(text);
    }
});
