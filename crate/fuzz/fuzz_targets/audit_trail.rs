//! Audit trails are read back for replay and reward training.

#![no_main]

use autota::agents::ReplayBackend;
use autota::model::AuditTrail;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(trail) = serde_json::from_slice::<AuditTrail>(data) {
        let _ = trail.validate();
        let _ = ReplayBackend::from_trail(&trail);
    }
});
