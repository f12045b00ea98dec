//! Replays the checked-in fuzz corpus through the parser entry points, so
//! the seeds stay exercised by plain `cargo test` even though the fuzzers
//! themselves need a nightly toolchain.

use std::fs;
use std::path::PathBuf;

fn corpus_dir(target: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fuzz/corpus")
        .join(target)
}

fn seeds(target: &str) -> Vec<(PathBuf, Vec<u8>)> {
    let dir = corpus_dir(target);
    let mut out = Vec::new();
    for entry in fs::read_dir(&dir).unwrap_or_else(|e| panic!("{}: {e}", dir.display())) {
        let path = entry.unwrap().path();
        if path.is_file() {
            let bytes = fs::read(&path).unwrap();
            out.push((path, bytes));
        }
    }
    assert!(!out.is_empty(), "no seeds in {}", dir.display());
    out
}

#[test]
fn state_json_seeds_parse_and_roundtrip() {
    for (path, bytes) in seeds("state_json") {
        let text = std::str::from_utf8(&bytes).unwrap();
        let state = qnetcode::io::parse_state_json(text)
            .unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        state.validate().unwrap();
        let back = qnetcode::io::parse_state_json(&qnetcode::io::state_to_json(&state)).unwrap();
        assert!(back.matrix().approx_eq(state.matrix(), 1e-9));
    }
}

#[test]
fn channel_json_seeds_parse() {
    for (path, bytes) in seeds("channel_json") {
        let text = std::str::from_utf8(&bytes).unwrap();
        qnetcode::io::parse_channel_json(text)
            .unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    }
}

#[test]
fn trace_json_seeds_parse_and_audit() {
    for (path, bytes) in seeds("trace_json") {
        let text = std::str::from_utf8(&bytes).unwrap();
        let trace = qnetcode::io::parse_trace_json(text)
            .unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        // Audits must not panic on imported traces.
        let _ = qnetcode::boundcheck::audit_independence(&trace);
        let _ = qnetcode::boundcheck::audit_chain(&trace);
    }
}

#[test]
fn preset_seeds_parse() {
    for (path, bytes) in seeds("preset") {
        let text = std::str::from_utf8(&bytes).unwrap();
        qnetcode::protocols::InputSpec::parse(text)
            .unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    }
}

#[test]
fn group_spec_seeds_parse() {
    for (path, bytes) in seeds("group_spec") {
        let text = std::str::from_utf8(&bytes).unwrap();
        qnetcode::io::parse_group_spec(text)
            .unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    }
}
