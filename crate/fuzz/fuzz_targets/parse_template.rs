#![no_main]

use libfuzzer_sys::fuzz_target;
use synergy_core::netmgmt::{parse_template, parse_template_line, render_template_line};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let _ = parse_template(text);
    if let Ok(entry) = parse_template_line(text, 1) {
        assert_eq!(render_template_line(&entry).as_deref(), Ok(text));
    }
});
