#![no_main]

use autota::report::parse_theme_list;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        let _ = parse_theme_list(s);
    }
});
