//! The schedule mini-grammar parser must never panic, and every accepted
//! schedule must re-parse from its canonical echo to the same evaluator.

#![no_main]

use libfuzzer_sys::fuzz_target;
use needlet_ustat::schedule::parse_schedule;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(sched) = parse_schedule(text) {
        let canon = sched.canonical();
        let reparsed = parse_schedule(&canon).expect("canonical form must re-parse");
        assert_eq!(reparsed.canonical(), canon);
        // evaluation may fail (division by zero) but must not panic
        for j in [1usize, 3, 7] {
            let a = sched.evaluate(j, 2.0, 1.5, 1.0);
            let b = reparsed.evaluate(j, 2.0, 1.5, 1.0);
            match (a, b) {
                (Ok(x), Ok(y)) => assert_eq!(x.to_bits(), y.to_bits()),
                (Err(_), Err(_)) => {}
                other => panic!("evaluation parity broke: {other:?}"),
            }
        }
    }
});
