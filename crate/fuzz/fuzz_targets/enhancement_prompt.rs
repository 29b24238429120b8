#![no_main]

use libfuzzer_sys::fuzz_target;
use synergy_serve::backend::EnhancementPrompt;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Some(p) = EnhancementPrompt::parse(text) {
        let _ = p.render();
    }
});
