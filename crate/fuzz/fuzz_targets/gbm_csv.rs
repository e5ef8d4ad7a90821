#![no_main]

use dyncorr::csv_io::read_gbm_csv;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(series) = read_gbm_csv(data) else { return };
    assert!(series.r.iter().chain(&series.s).all(|v| *v > 0.0));
    let _ = series.check_sigma(0.1);
});
