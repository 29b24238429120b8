#![no_main]

use libfuzzer_sys::fuzz_target;
use synergy_core::protocol::{decode_frame, encode_frame};

fuzz_target!(|data: &[u8]| {
    if let Ok((frame, used)) = decode_frame(data) {
        assert!(used <= data.len());
        // the body format is canonical, so accepted bytes re-encode exactly
        let again = encode_frame(&frame).expect("decoded frames encode");
        assert_eq!(&again[..], &data[..used]);
    }
});
