#![no_main]

use dyncorr::config::ExperimentConfig;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(cfg) = ExperimentConfig::from_toml(text) else {
        return;
    };
    assert_eq!(ExperimentConfig::from_toml(&cfg.to_toml()).expect("round trip"), cfg);
});
