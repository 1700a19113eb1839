//! System documents decoded from arbitrary bytes must either fail with
//! an error or produce a validated system that re-serializes cleanly.

#![no_main]

use libfuzzer_sys::fuzz_target;
use pfaffian::docs::SystemDocument;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if text.len() > 16384 {
        return;
    }
    let Ok(doc) = SystemDocument::from_json(text) else {
        return;
    };
    if let Ok(sys) = doc.to_system() {
        let round = SystemDocument::from_system(&sys);
        let sys2 = round
            .to_system()
            .expect("re-serialized system must validate");
        assert_eq!(sys, sys2, "round trip must preserve the system");
    }
});
