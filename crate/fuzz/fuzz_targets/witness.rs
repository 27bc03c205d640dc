#![no_main]

use libfuzzer_sys::fuzz_target;
use netcov::decompose::{parse_witness, verify_witness};
use netcov::network::catalog::triangle;
use netcov::HermitianMatrix;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(w) = parse_witness(text) {
        let _ = verify_witness(&triangle(), &HermitianMatrix::ones(3), &w, 1e-9);
    }
});
