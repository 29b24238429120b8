#![no_main]

use libfuzzer_sys::fuzz_target;
use synergy_serve::client::parse_prompt_file;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        for p in parse_prompt_file(text, "bs-001") {
            assert!(!p.bs_id.is_empty());
        }
    }
});
