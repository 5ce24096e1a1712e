//! Config parsing and validation must reject bad input with an error, never a panic.

#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        if let Ok(cfg) = cxa::parse_config(s) {
            let _ = cfg.hash();
        }
    }
});
