#![no_main]

use dyncorr::bm::{estimate_bm, BmEstimatorParams};
use dyncorr::csv_io::read_bm_csv;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(series) = read_bm_csv(data) else { return };
    assert_eq!(series.x.len(), series.y.len());
    let params = BmEstimatorParams::new(0.5, 1.0).unwrap();
    if let Ok(e) = estimate_bm(&series.x, &series.y, 1, params) {
        if let Some(r) = e.rho_hat {
            assert!((-1.0..=1.0).contains(&r));
        }
    }
});
