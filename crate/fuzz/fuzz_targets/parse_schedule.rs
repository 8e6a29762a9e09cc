//! Coefficient schedules: whatever deserializes must emit only in-range
//! weights, and probing deep levels must stay total.

#![no_main]

use libfuzzer_sys::fuzz_target;
use tree_mvs::coefficients::CoefficientSchedule;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(schedule) = serde_json::from_str::<CoefficientSchedule>(text) {
            let sup = schedule.sup_bound();
            assert!((0.0..=1.0).contains(&sup), "sup bound {sup} out of range");
            for k in (0..64).chain([1 << 20, usize::MAX >> 1, usize::MAX]) {
                if let Ok(v) = schedule.value_at(k) {
                    assert!(
                        (0.0..=1.0).contains(&v),
                        "level {k} weight {v} escapes [0, 1]"
                    );
                    assert!(v <= sup + 1e-15, "level {k} exceeds the sup bound");
                }
            }
        }
    }
});
