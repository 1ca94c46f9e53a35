//! Sidecar plus binary payload decoding must never panic. The input encodes
//! the sidecar length as a 2-byte LE prefix, then sidecar JSON, then payload.
#![no_main]

use libfuzzer_sys::fuzz_target;
use lsmcf::snapshot;

fuzz_target!(|data: &[u8]| {
    if data.len() < 2 {
        return;
    }
    let split = u16::from_le_bytes([data[0], data[1]]) as usize;
    let rest = &data[2..];
    if split > rest.len() {
        return;
    }
    let (sidecar_bytes, payload) = rest.split_at(split);
    if let Ok(sidecar) = snapshot::parse_sidecar(sidecar_bytes) {
        let _ = snapshot::decode_field(&sidecar, payload);
    }
});
