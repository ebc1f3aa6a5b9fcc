#![no_main]

use dyson_iso::network::{build_green, Network};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(net) = text.parse::<Network>() else { return };
    let json = serde_json::to_string(&net).expect("serializes");
    assert_eq!(json.parse::<Network>().expect("round trip"), net);
    if net.len() <= 16 {
        let _ = build_green(&net);
    }
});
