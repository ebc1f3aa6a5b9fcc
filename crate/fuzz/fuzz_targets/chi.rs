#![no_main]

use dyson_iso::line::{solve_chi, PiecewiseConstChi};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let from_text = text.parse::<PiecewiseConstChi>();
    let from_json = serde_json::from_str::<PiecewiseConstChi>(text);
    for chi in [from_text.ok(), from_json.ok()].into_iter().flatten() {
        assert_eq!(chi.to_string().parse::<PiecewiseConstChi>().expect("display parses"), chi);
        if let Ok(sol) = solve_chi(&chi) {
            let u = sol.u_inf();
            assert!(u.is_nan() || (0.0..=1.0).contains(&u));
        }
    }
});
