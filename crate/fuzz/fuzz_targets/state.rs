#![no_main]

use libfuzzer_sys::fuzz_target;
use netcov::witness::VectorJson;

fuzz_target!(|data: &[u8]| {
    if let Ok(v) = serde_json::from_slice::<VectorJson>(data) {
        let _ = v.to_vector();
    }
});
