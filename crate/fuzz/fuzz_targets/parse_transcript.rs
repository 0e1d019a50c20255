//! Transcript parsing must never panic, and anything it accepts must
//! survive a render/parse round trip unchanged.

#![no_main]

use autota::corpus::{chunk_transcript, parse_transcript};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(t) = parse_transcript(text, "fuzz") else { return };
    let again = parse_transcript(&t.render(), "fuzz").expect("rendered transcript parses");
    assert_eq!(again, t);

    let chunks = chunk_transcript(&t, 1 + data.len() % 97).expect("positive limit");
    let n: usize = chunks.iter().map(|c| c.utterances.len()).sum();
    assert_eq!(n, t.utterances.len());
});
