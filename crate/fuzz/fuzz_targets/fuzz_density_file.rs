//! The density file parser must never panic, and accepted files must
//! round-trip through the formatter.

#![no_main]

use libfuzzer_sys::fuzz_target;
use needlet_ustat::density::{format_density_file, parse_density_file};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(parsed) = parse_density_file(text) {
        let formatted = format_density_file(&parsed);
        let reparsed = parse_density_file(&formatted).expect("formatted file must re-parse");
        assert_eq!(parsed, reparsed);
    }
});
