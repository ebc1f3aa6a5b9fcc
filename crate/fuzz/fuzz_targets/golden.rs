#![no_main]

use dyson_iso::harness::golden::parse_golden;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        let _ = parse_golden(text);
    }
});
