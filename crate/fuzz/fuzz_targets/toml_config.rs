//! Fuzzes the TOML config decoders: any byte sequence must either parse into
//! a config or return an error — never panic.

#![no_main]

use cli::config::{OnlineRunConfig, RecalibrateConfig, RunConfig};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        let _ = toml::from_str::<RunConfig>(text);
        let _ = toml::from_str::<OnlineRunConfig>(text);
        let _ = toml::from_str::<RecalibrateConfig>(text);
    }
});
