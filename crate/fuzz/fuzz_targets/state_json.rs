#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(input) = std::str::from_utf8(data) {
        // Parsing must never panic; a parsed state must satisfy the
        // density-operator invariants and survive a round trip.
        if let Ok(state) = qnetcode::io::parse_state_json(input) {
            state.validate().expect("parsed states are valid");
            let json = qnetcode::io::state_to_json(&state);
            let back = qnetcode::io::parse_state_json(&json).expect("round trip");
            assert!(back.matrix().approx_eq(state.matrix(), 1e-9));
        }
    }
});
