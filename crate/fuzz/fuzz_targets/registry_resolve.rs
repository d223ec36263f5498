#![no_main]

use libfuzzer_sys::fuzz_target;
use parabvp::config::ScenarioConfig;

// Resolution only: builds the family members but never integrates.
fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(cfg) = ScenarioConfig::from_json(text) else { return };
    let Ok(scenario) = cfg.resolve() else { return };
    for &eps in scenario.epsilons.iter().take(4) {
        if let Ok(p) = scenario.problem(eps) {
            assert_eq!(p.dim(), cfg.dim);
            assert_eq!(p.interval, scenario.interval);
        }
    }
});
