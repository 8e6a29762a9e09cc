//! Whole-document parsing must reject junk with an error, never a panic.

#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(problem) = tree_mvs::config::load_problem(text) {
            // Anything that parses is internally consistent.
            assert_eq!(
                problem.system.component_count(),
                problem.boundary.component_count()
            );
            if let Some(tol) = problem.tol {
                assert!(tol.is_finite() && tol > 0.0);
            }
        }
    }
});
