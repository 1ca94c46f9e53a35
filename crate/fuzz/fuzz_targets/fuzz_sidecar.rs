//! Snapshot sidecar parsing must never panic on untrusted JSON bytes.
#![no_main]

use libfuzzer_sys::fuzz_target;
use lsmcf::snapshot;

fuzz_target!(|data: &[u8]| {
    let _ = snapshot::parse_sidecar(data);
});
