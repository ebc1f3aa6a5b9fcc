#![no_main]

use dyson_iso::harness::RunConfig;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(cfg) = serde_json::from_slice::<RunConfig>(data) {
        let _ = cfg.validate();
        let json = serde_json::to_vec(&cfg).expect("serializes");
        let back: RunConfig = serde_json::from_slice(&json).expect("round trip");
        assert_eq!(back, cfg);
    }
});
