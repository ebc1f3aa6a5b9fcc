#![no_main]

use dyson_iso::gbe::IndexFamily;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(nu) = text.parse::<IndexFamily>() {
        assert!(nu.entries().iter().all(|&q| q > 0));
        assert_eq!(nu.to_string().parse::<IndexFamily>().expect("display parses"), nu);
    }
});
