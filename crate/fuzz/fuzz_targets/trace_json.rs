#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(input) = std::str::from_utf8(data) {
        if let Ok(trace) = qnetcode::io::parse_trace_json(input) {
            // Whatever parses must be auditable without panics.
            let _ = qnetcode::boundcheck::audit_independence(&trace);
            let _ = qnetcode::boundcheck::audit_chain(&trace);
        }
    }
});
