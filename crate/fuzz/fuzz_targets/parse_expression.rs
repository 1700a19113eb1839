//! The expression parser must never panic on arbitrary input, and any
//! polynomial it accepts must print/parse round-trip to itself.

#![no_main]

use libfuzzer_sys::fuzz_target;
use pfaffian::parse::parse_expression;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    // Cap the exponent blow-up: huge inputs are legal but slow.
    if text.len() > 4096 {
        return;
    }
    for (m, n) in [(1usize, 1usize), (2, 2), (3, 1)] {
        if let Ok(poly) = parse_expression(text, m, n) {
            let printed = poly.to_string();
            let back = parse_expression(&printed, m, n)
                .expect("printed polynomial must re-parse");
            assert_eq!(back, poly, "round trip must be exact");
        }
    }
});
