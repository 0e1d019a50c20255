#![no_main]

use autota::agents::response::parse_code_response;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        let _ = parse_code_response(s);
    }
});
