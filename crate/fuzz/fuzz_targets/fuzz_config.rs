//! The key=value config parser must never panic; accepted configs must
//! satisfy their own validation.

#![no_main]

use libfuzzer_sys::fuzz_target;
use needlet_ustat::config::{parse_experiment_config, validate};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(cfg) = parse_experiment_config(text) {
        validate(&cfg).expect("parse_experiment_config only returns validated configs");
        assert!(!cfg.j_list().is_empty());
    }
});
