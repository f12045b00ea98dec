#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(input) = std::str::from_utf8(data) {
        if let Ok(spec) = qnetcode::protocols::InputSpec::parse(input) {
            let state = spec.realize("q");
            assert_eq!(state.dim(), 2);
        }
    }
});
