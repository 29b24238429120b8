#![no_main]

use libfuzzer_sys::fuzz_target;
use synergy_core::netmgmt::{bucketize, load_viewing_csv, Window};

fuzz_target!(|data: &[u8]| {
    if let Ok(records) = load_viewing_csv(data, "timestamp", "title") {
        let _ = bucketize(&records, 21_600, 20, Window::default());
    }
});
