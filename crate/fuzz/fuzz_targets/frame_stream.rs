#![no_main]

use libfuzzer_sys::fuzz_target;
use synergy_core::protocol::{Frame, FrameDecoder};

fn drain(dec: &mut FrameDecoder, out: &mut Vec<Option<Frame>>) {
    while !dec.is_poisoned() {
        match dec.next_frame() {
            Ok(Some(f)) => out.push(Some(f)),
            Ok(None) => break,
            Err(_) => out.push(None),
        }
    }
}

// Chunk boundaries must not change what the decoder yields.
fuzz_target!(|data: &[u8]| {
    let Some((&split, rest)) = data.split_first() else {
        return;
    };
    let mut whole = Vec::new();
    let mut dec = FrameDecoder::new();
    dec.extend(rest);
    drain(&mut dec, &mut whole);

    let mut chunked = Vec::new();
    let mut dec = FrameDecoder::new();
    for piece in rest.chunks(usize::from(split).max(1)) {
        dec.extend(piece);
        drain(&mut dec, &mut chunked);
    }
    assert_eq!(whole, chunked);
});
