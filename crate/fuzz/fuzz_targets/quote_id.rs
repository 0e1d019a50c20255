#![no_main]

use autota::corpus::{scan_quote_ids, QuoteId};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else { return };
    if let Ok(id) = s.parse::<QuoteId>() {
        // only canonical forms are accepted
        assert_eq!(id.to_string(), s.trim());
    }
    for id in scan_quote_ids(s) {
        assert_eq!(id.to_string().parse::<QuoteId>().ok(), Some(id));
    }
});
