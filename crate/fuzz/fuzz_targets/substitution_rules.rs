#![no_main]

use complex_action::tape::{expand, predict_counts, SubstitutionSystem};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        // First line is the seed word, the rest are rules.
        let (seed, rules) = s.split_once('\n').unwrap_or(("A", s));
        if let Ok(sys) = SubstitutionSystem::parse(rules, seed, false) {
            let _ = sys.eigenvalues();
            let _ = predict_counts(&sys, 8);
            let _ = expand(&sys, 6, 1 << 16);
        }
    }
});
