#![no_main]

use libfuzzer_sys::fuzz_target;
use synergy_serve::backend::{parse_replay_corpus, render_replay_corpus};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(entries) = parse_replay_corpus(text) {
        let again = parse_replay_corpus(&render_replay_corpus(&entries)).expect("rendered corpus parses");
        assert_eq!(again, entries);
    }
});
