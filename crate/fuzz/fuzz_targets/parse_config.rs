#![no_main]

use libfuzzer_sys::fuzz_target;
use sburgers_cli::config::{ExperimentConfig, Overrides};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(cfg) = ExperimentConfig::from_toml_str(text) else {
        return;
    };
    let _ = cfg.validate();
    if let Ok(resolved) = cfg.resolve(&Overrides::default()) {
        // A valid configuration must survive its own echo.
        let echo = ExperimentConfig::from_toml_str(&resolved.to_toml()).expect("echo parses");
        assert_eq!(echo, resolved);
    }
});
