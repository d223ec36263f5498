#![no_main]

use libfuzzer_sys::fuzz_target;
use parabvp::config::BoundarySpec;
use parabvp::registry::boundary_measure;
use parabvp::Interval;

// First byte picks the dimension; the rest is a `boundary` JSON block on [0, 1].
fuzz_target!(|data: &[u8]| {
    let Some((&head, rest)) = data.split_first() else { return };
    let dim = usize::from(head % 4) + 1;
    let Ok(text) = std::str::from_utf8(rest) else { return };
    let Ok(spec) = serde_json::from_str::<BoundarySpec>(text) else { return };
    let Ok(u) = boundary_measure(&spec, Interval::unit(), dim) else { return };
    let norm = u.operator_norm();
    assert!(norm >= 0.0 || norm.is_nan());
    assert!(u.atoms().windows(2).all(|w| w[0].location < w[1].location));
    assert!(u.atoms().iter().all(|a| !a.weight.is_zero()));
});
