#![no_main]

use libfuzzer_sys::fuzz_target;
use parabvp::config::ScenarioConfig;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(cfg) = ScenarioConfig::from_json(text) else { return };
    let _ = cfg.validate();
    let again = ScenarioConfig::from_json(&cfg.to_json()).expect("serialized config parses");
    assert_eq!(again, cfg);
});
