#![no_main]

use libfuzzer_sys::fuzz_target;
use netcov::inflate::{build_inflation, parse_inflation_spec};
use netcov::network::catalog::{path3, triangle};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    for net in [path3(), triangle()] {
        if let Ok(spec) = parse_inflation_spec(text, &net) {
            if spec.d() <= 64 {
                let _ = build_inflation(&net, &spec);
            }
        }
    }
});
