#![no_main]

use libfuzzer_sys::fuzz_target;
use netcov::decompose::{parse_decomposition, verify_decomposition};
use netcov::network::catalog::{path3, triangle};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    for net in [path3(), triangle()] {
        if let Ok(d) = parse_decomposition(text, &net) {
            let _ = verify_decomposition(&net, &d.target, &d, 1e-7);
        }
    }
});
