#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(input) = std::str::from_utf8(data) {
        if let Ok((a, b, _c)) = qnetcode::io::parse_group_spec(input) {
            assert!(!a.is_empty() && !b.is_empty());
        }
    }
});
