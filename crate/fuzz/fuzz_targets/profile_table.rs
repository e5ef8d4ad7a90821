#![no_main]

use dyncorr::csv_io::read_profile_table;
use dyncorr::profile::{CorrelationProfile, ProfileSpec, TimeGrid};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(values) = read_profile_table(data) else { return };
    let Ok(grid) = TimeGrid::new(values.len()) else { return };
    let _ = CorrelationProfile::build(ProfileSpec::Table(values), grid);
});
