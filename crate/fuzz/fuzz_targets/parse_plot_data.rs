#![no_main]

use dichotomy::report::{parse_plot_data, write_plot_data};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(series) = parse_plot_data(text) {
        // Names with stray carriage returns are rejected by the writer.
        if let Ok(written) = write_plot_data(&series) {
            assert_eq!(parse_plot_data(&written).expect("written series parses"), series);
        }
    }
});
