//! Boundary specs: anything that parses and validates must evaluate to a
//! finite number everywhere on the unit interval.

#![no_main]

use libfuzzer_sys::fuzz_target;
use tree_mvs::solver::BoundarySpec;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(spec) = serde_json::from_str::<BoundarySpec>(text) {
            if spec.validate().is_ok() {
                for i in 0..=64 {
                    let t = i as f64 / 64.0;
                    let v = spec.eval(t);
                    assert!(v.is_finite(), "eval({t}) = {v} on a validated spec");
                }
            }
        }
    }
});
