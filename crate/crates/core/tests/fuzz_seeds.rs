//! Replays the fuzz corpus seeds, plus seeded byte mutations of them,
//! through the same decoders the fuzz targets exercise.

use std::fs;
use std::path::Path;

use parabvp::config::{BoundarySpec, ScenarioConfig};
use parabvp::registry::boundary_measure;
use parabvp::Interval;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn seeds(target: &str) -> Vec<Vec<u8>> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus").join(target);
    let mut out: Vec<Vec<u8>> = fs::read_dir(dir)
        .unwrap()
        .map(|e| fs::read(e.unwrap().path()).unwrap())
        .collect();
    out.sort();
    assert!(!out.is_empty());
    out
}

fn mutants(seeds: &[Vec<u8>], n: usize) -> Vec<Vec<u8>> {
    let mut r = ChaCha8Rng::seed_from_u64(0x5eed);
    const TOKENS: [&[u8]; 8] = [b"-1e308", b"0", b"1e-320", b"[]", b"null", b"\"x\"", b"{}", b"NaN"];
    (0..n)
        .map(|_| {
            let mut s = seeds[r.gen_range(0..seeds.len())].clone();
            for _ in 0..r.gen_range(1..4) {
                let at = r.gen_range(0..=s.len());
                match r.gen_range(0..3) {
                    0 if !s.is_empty() => {
                        let i = r.gen_range(0..s.len());
                        s[i] = r.gen();
                    }
                    1 if at < s.len() => {
                        let end = (at + r.gen_range(1..8)).min(s.len());
                        s.drain(at..end);
                    }
                    _ => {
                        let tok = TOKENS[r.gen_range(0..TOKENS.len())];
                        s.splice(at..at, tok.iter().copied());
                    }
                }
            }
            s
        })
        .collect()
}

fn config_parse(data: &[u8]) {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(cfg) = ScenarioConfig::from_json(text) else { return };
    let _ = cfg.validate();
    assert_eq!(ScenarioConfig::from_json(&cfg.to_json()).unwrap(), cfg);
}

fn boundary_spec(data: &[u8]) {
    let Some((&head, rest)) = data.split_first() else { return };
    let dim = usize::from(head % 4) + 1;
    let Ok(text) = std::str::from_utf8(rest) else { return };
    let Ok(spec) = serde_json::from_str::<BoundarySpec>(text) else { return };
    let Ok(u) = boundary_measure(&spec, Interval::unit(), dim) else { return };
    let _ = u.operator_norm();
    assert!(u.atoms().windows(2).all(|w| w[0].location < w[1].location));
}

fn registry_resolve(data: &[u8]) {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(cfg) = ScenarioConfig::from_json(text) else { return };
    let Ok(s) = cfg.resolve() else { return };
    for &eps in s.epsilons.iter().take(4) {
        if let Ok(p) = s.problem(eps) {
            assert_eq!(p.dim(), cfg.dim);
        }
    }
}

#[test]
fn seeds_decode_cleanly() {
    for s in seeds("config_parse") {
        let cfg = ScenarioConfig::from_json(std::str::from_utf8(&s).unwrap()).unwrap();
        cfg.validate().unwrap();
    }
    for s in seeds("registry_resolve") {
        ScenarioConfig::from_json(std::str::from_utf8(&s).unwrap()).unwrap().resolve().unwrap();
    }
    for s in seeds("boundary_spec") {
        let spec: BoundarySpec = serde_json::from_slice(&s[1..]).unwrap();
        boundary_measure(&spec, Interval::unit(), usize::from(s[0] % 4) + 1).unwrap();
    }
}

#[test]
fn mutated_seeds_never_panic() {
    for (target, run) in [
        ("config_parse", config_parse as fn(&[u8])),
        ("boundary_spec", boundary_spec),
        ("registry_resolve", registry_resolve),
    ] {
        for m in mutants(&seeds(target), 3000) {
            run(&m);
        }
    }
}
