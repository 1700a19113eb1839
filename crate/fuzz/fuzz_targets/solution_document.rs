//! Solution documents decoded from arbitrary bytes must either fail
//! with an error or produce series that re-serialize to an equal document.

#![no_main]

use libfuzzer_sys::fuzz_target;
use pfaffian::docs::SolutionDocument;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if text.len() > 16384 {
        return;
    }
    let Ok(doc) = SolutionDocument::from_json(text) else {
        return;
    };
    if let Ok(phi) = doc.to_series_vec() {
        let round = SolutionDocument::from_series_vec(&phi);
        let phi2 = round
            .to_series_vec()
            .expect("re-serialized solution must validate");
        assert_eq!(phi, phi2, "round trip must preserve the series");
    }
});
