#![no_main]

use libfuzzer_sys::fuzz_target;
use synergy_serve::profile::{parse_profile, render_profile};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(p) = parse_profile(text) {
        let _ = p.select_facts(text);
        assert_eq!(parse_profile(&render_profile(&p)), Ok(p));
    }
});
