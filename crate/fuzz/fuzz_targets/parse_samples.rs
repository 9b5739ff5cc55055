#![no_main]

use dichotomy::report::{parse_samples, write_samples};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(table) = parse_samples(text) {
        let written = write_samples(&table).expect("parsed table writes");
        assert_eq!(parse_samples(&written).expect("written table parses"), table);
    }
});
