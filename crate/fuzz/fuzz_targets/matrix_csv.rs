#![no_main]

use libfuzzer_sys::fuzz_target;
use netcov::format::{parse_matrix_auto, parse_matrix_csv};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let _ = parse_matrix_csv(text);
    let _ = parse_matrix_auto(text);
});
