#![no_main]

use libfuzzer_sys::fuzz_target;
use netcov::network::parse_network;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(net) = parse_network(text) {
        let again = parse_network(&serde_json::to_string(&net.to_json()).unwrap()).unwrap();
        assert_eq!(again, net);
        let _ = net.is_ndcs();
    }
});
