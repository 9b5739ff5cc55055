#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(spec) = dichotomy::model::load_config(text) {
        // The normalised document must load again and stay fixed.
        let once = spec.to_config_string();
        let again = dichotomy::model::load_config(&once).expect("normalised config reloads");
        assert_eq!(again.to_config_string(), once);
    }
});
