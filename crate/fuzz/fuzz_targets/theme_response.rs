#![no_main]

use autota::agents::response::parse_theme_response;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        let _ = parse_theme_response(s);
    }
});
