//! Critic replies; every accepted edit must convert to a proposal.

#![no_main]

use autota::agents::response::parse_edit_response;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else { return };
    if let Ok(edits) = parse_edit_response(s) {
        for e in edits {
            let _ = e.into_proposal().check_shape();
        }
    }
});
