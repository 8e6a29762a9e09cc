//! Dotted node notation: accepted strings round-trip exactly, everything
//! else errors without panicking.

#![no_main]

use std::str::FromStr;

use libfuzzer_sys::fuzz_target;
use tree_mvs::tree::NodeId;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(node) = NodeId::from_str(text) {
            let rendered = node.to_string();
            let reparsed = NodeId::from_str(&rendered).expect("rendered form reparses");
            assert_eq!(node, reparsed, "{text:?} -> {rendered:?} drifts");
            // Index arithmetic stays total for any arity that admits the
            // node's digits.
            for m in 2u32..=10 {
                match node.flat_index(m) {
                    Ok(flat) => {
                        assert_eq!(NodeId::from_flat(node.level(), flat, m), node);
                        let psi = node.psi(m).expect("indexable nodes have a position");
                        assert!((0.0..=1.0).contains(&psi));
                    }
                    Err(_) => (),
                }
            }
        }
    }
});
