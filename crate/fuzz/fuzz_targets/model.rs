#![no_main]

use libfuzzer_sys::fuzz_target;
use netcov::network::catalog::{path3, triangle};
use netcov::simulate::{covariance_from_model_capped, parse_model, OutputFunctions};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    for net in [path3(), triangle()] {
        if let Ok((model, f)) = parse_model(text, &net) {
            let f = f.unwrap_or_else(|| OutputFunctions::parity(&model.output_alphabets()));
            let _ = covariance_from_model_capped(&net, &model, &f, 1 << 16);
        }
    }
});
