//! Experiment config parsing must never panic on untrusted JSON.
#![no_main]

use libfuzzer_sys::fuzz_target;
use lsmcf::config::ExperimentConfig;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        let _ = ExperimentConfig::from_json(text);
    }
});
