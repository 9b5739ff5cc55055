#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(report) = dichotomy::report::parse_report(text) {
        let again = dichotomy::report::parse_report(&report.to_json()).expect("serialised report parses");
        assert_eq!(again, report);
    }
});
