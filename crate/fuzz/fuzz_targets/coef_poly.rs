#![no_main]

use dyson_iso::algebra::CoefPoly;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(p) = text.parse::<CoefPoly>() {
        let again: CoefPoly = p.to_string().parse().expect("canonical form parses");
        assert_eq!(again, p);
    }
});
