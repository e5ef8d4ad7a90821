#![no_main]

use dyncorr::profile::{CorrelationProfile, ProfileSpec, TimeGrid};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(spec) = text.parse::<ProfileSpec>() else { return };
    let again: ProfileSpec = spec.to_string().parse().expect("display output parses");
    assert_eq!(again, spec);
    if let Ok(p) = CorrelationProfile::build(spec, TimeGrid::new(64).unwrap()) {
        assert!(p.increment_correlations().iter().all(|r| (-1.0..=1.0).contains(r)));
    }
});
