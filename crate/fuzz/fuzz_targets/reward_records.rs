#![no_main]

use autota::reward::parse_reward_records;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else { return };
    if let Ok(records) = parse_reward_records(s) {
        for r in records {
            assert!(r.rating <= 1);
        }
    }
});
