//! Averaging operators: every kind that constructs must map sample tuples
//! into their own hull, at every arity we solve on.

#![no_main]

use libfuzzer_sys::fuzz_target;
use tree_mvs::averaging::{AveragingOperator, OperatorKind};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(kind) = serde_json::from_str::<OperatorKind>(text) else {
        return;
    };
    for arity in 2..=6 {
        let Ok(op) = AveragingOperator::new(kind, arity) else {
            continue;
        };
        let ramp: Vec<f64> = (0..arity).map(|j| j as f64 / arity as f64).collect();
        let spike: Vec<f64> =
            (0..arity).map(|j| if j == 0 { 1.0 } else { -1.0 }).collect();
        for values in [vec![0.0; arity], ramp, spike] {
            let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let v = op.eval(&values).expect("arity matches by construction");
            // Root finding inside pmean can land an ulp past the bracket.
            assert!(
                v >= lo - 1e-9 && v <= hi + 1e-9,
                "{kind:?} at arity {arity} sent {values:?} to {v}"
            );
        }
    }
});
