#![no_main]

use libfuzzer_sys::fuzz_target;
use netcov::network::catalog::{path3, triangle};
use netcov::witness::{build_twisted_gram, parse_twisted_gram_spec};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    for net in [path3(), triangle()] {
        if let Ok(spec) = parse_twisted_gram_spec(text, &net) {
            let _ = build_twisted_gram(&net, &spec);
        }
    }
});
