#![no_main]

use autota_cli::RunConfig;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else { return };
    if let Ok(cfg) = toml::from_str::<RunConfig>(s) {
        let _ = cfg.pipeline_config();
    }
    let _ = serde_json::from_str::<RunConfig>(s);
});
