#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(input) = std::str::from_utf8(data) {
        if let Ok(channel) = qnetcode::io::parse_channel_json(input) {
            // A parsed channel is trace preserving; applying it to the
            // maximally mixed input must stay a unit-trace matrix.
            let dim = channel.input_dim();
            let mixed = qnetcode::ComplexMatrix::identity(dim)
                .scale(num_complex::Complex64::new(1.0 / dim as f64, 0.0));
            let out = channel.apply_matrix(&mixed).expect("dimensions match");
            assert!((out.trace().re - 1.0).abs() < 1e-6);
            let json = qnetcode::io::channel_to_json(&channel);
            qnetcode::io::parse_channel_json(&json).expect("round trip");
        }
    }
});
