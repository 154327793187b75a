//! Run with: `cargo +nightly fuzz run config_parse`

#![no_main]

use cvtherm_cli::RunConfig;
use libfuzzer_sys::{fuzz_target, Corpus};

fuzz_target!(|data: &[u8]| -> Corpus {
    let Ok(src) = std::str::from_utf8(data) else {
        return Corpus::Reject;
    };
    match RunConfig::parse(src) {
        Ok(cfg) => {
            // anything accepted must survive its own serialization
            let again = RunConfig::parse(&cfg.to_toml()).expect("re-parse of emitted config");
            assert_eq!(again.model(), cfg.model());
            let _ = cfg.sweep_points();
            let _ = cfg.grid();
        }
        Err(e) => {
            let _ = e.to_string();
        }
    }
    Corpus::Keep
});
