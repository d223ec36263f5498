//! End-to-end acceptance checks. Runs without the libtest harness so that
//! every criterion prints exactly one PASS/FAIL line; the process exits
//! non-zero if any criterion fails.

mod common;

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use common::{max_abs_diff, random_problem, rng};
use parabvp::config::ScenarioConfig;
use parabvp::lab::{
    class_m_value, green_convergence, green_grid, kiguradze_battery, levin_conditions, solution_convergence,
};
use parabvp::ode::{l1_norm, matrizant, sup_norm};
use parabvp::{green_apply, green_matrix, solve_bvp, AbsNorm, FamilyScenario, Interval};
use rand::Rng;

const TOL: f64 = 1e-9;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn scenario(json: &str) -> FamilyScenario {
    ScenarioConfig::from_json(json).unwrap().build().unwrap()
}

fn strictly_decreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] < w[0])
}

fn within(elapsed: Duration, limit: f64) -> bool {
    elapsed.as_secs_f64() < limit
}

/// Example 2: the shifted evaluation point keeps the Green matrices a unit apart.
fn example2_reproduction() -> Outcome {
    let start = Instant::now();
    let s = scenario(
        r#"{"name": "example2", "interval": [0, 1], "dim": 1, "epsilons": [0.1, 0.05, 0.01],
            "family": {"registry": "example2"}, "grids": {"green": 201}}"#,
    );
    let grid = green_grid(s.interval, 201);
    let mut pass = true;
    let mut worst_gap: f64 = 0.0;
    for &eps in &s.epsilons {
        let k = kiguradze_battery(&s, eps).unwrap();
        pass &= k.u_variation == 2.0;
        pass &= grid.iter().filter(|&&x| x < eps).count() >= 2;
    }
    for d in green_convergence(&s, 201, TOL).unwrap() {
        let d = d.unwrap();
        worst_gap = worst_gap.max((d - 1.0).abs());
    }
    pass &= worst_gap <= 1e-9;

    let b = &s.baseline;
    let g0 = green_matrix(&b.a, &b.u, s.interval, TOL).unwrap();
    let table = g0.tabulate(&grid, &grid).unwrap();
    let mut baseline_err: f64 = 0.0;
    for (row, &t) in table.iter().zip(&grid) {
        for (g, &x) in row.iter().zip(&grid) {
            if x != t {
                let expected = if x < t { 1.0 } else { 0.0 };
                baseline_err = baseline_err.max((g[(0, 0)].re - expected).abs() + g[(0, 0)].im.abs());
            }
        }
    }
    pass &= baseline_err <= 1e-9;
    let elapsed = start.elapsed();
    pass &= within(elapsed, 5.0);
    outcome(
        pass,
        format!(
            "variation 2 at every eps, max |green_diff - 1| = {worst_gap:.2e}, baseline error {baseline_err:.2e}, {:.2}s",
            elapsed.as_secs_f64()
        ),
    )
}

fn example1() -> FamilyScenario {
    scenario(
        r#"{"name": "example1", "interval": [0, 1], "dim": 2,
            "family": {"registry": "example1"}, "c": {"re": [1, 1]}}"#,
    )
}

/// Example 1: unbounded L1 norm with vanishing antiderivative and class-M evidence.
fn example1_profile() -> Outcome {
    let start = Instant::now();
    let s = example1();
    let rows: Vec<_> = std::thread::scope(|scope| {
        let handles: Vec<_> = s
            .epsilons
            .iter()
            .map(|&eps| {
                let s = &s;
                scope.spawn(move || {
                    let levin = levin_conditions(s, eps).unwrap();
                    let cond4p = kiguradze_battery(s, eps).unwrap().cond4p;
                    let sup_z = class_m_value(s, eps, TOL).unwrap();
                    let reference = class_m_value(s, eps, TOL / 100.0).unwrap();
                    (eps, levin, cond4p, sup_z, reference)
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().unwrap()).collect()
    });
    let target = 4.0 / PI;
    let mut pass = true;
    let mut alpha_dev: f64 = 0.0;
    let mut min_levin = f64::INFINITY;
    let mut ref_gap: f64 = 0.0;
    for (eps, l, cond4p, sup_z, reference) in &rows {
        pass &= *cond4p <= 2.0 * eps.sqrt() + 1e-6;
        ref_gap = ref_gap.max((sup_z - reference).abs());
        if *eps <= 1e-3 {
            let scaled = l.alpha * eps.sqrt();
            alpha_dev = alpha_dev.max((scaled / target - 1.0).abs());
            min_levin = min_levin.min(l.beta.min(l.gamma).min(l.delta));
        }
    }
    pass &= alpha_dev <= 0.02 && min_levin > 0.1;
    let sup_z: Vec<f64> = rows.iter().map(|r| r.3).collect();
    let reference: Vec<f64> = rows.iter().map(|r| r.4).collect();
    for v in [&sup_z, &reference] {
        pass &= strictly_decreasing(v) && v[v.len() - 1] <= 0.25 * v[0];
    }
    let elapsed = start.elapsed();
    pass &= within(elapsed, 60.0);
    outcome(
        pass,
        format!(
            "max |sqrt(eps) alpha / (4/pi) - 1| = {alpha_dev:.2e}, min(beta, gamma, delta) = {min_levin:.3}, \
             supZ {:.3} -> {:.3}, |supZ - reference| <= {ref_gap:.1e}, {:.1}s",
            sup_z[0],
            sup_z[sup_z.len() - 1],
            elapsed.as_secs_f64()
        ),
    )
}

/// Example 1 embedded in `y(0) = (1, 1)`: solutions converge although `||A||_1` blows up.
fn example1_solutions() -> Outcome {
    let start = Instant::now();
    let s = example1();
    let diffs: Vec<f64> = solution_convergence(&s, TOL)
        .unwrap()
        .into_iter()
        .map(|d| d.unwrap())
        .collect();
    let pass = strictly_decreasing(&diffs) && diffs[diffs.len() - 1] <= 0.25 * diffs[0];
    outcome(
        pass,
        format!(
            "sol_diff {:.3e} -> {:.3e}, {:.1}s",
            diffs[0],
            diffs[diffs.len() - 1],
            start.elapsed().as_secs_f64()
        ),
    )
}

fn corpus() -> Vec<parabvp::BVProblem> {
    let mut r = rng(20_240_601);
    (0..20)
        .map(|_| {
            let dim = r.gen_range(1..=3);
            random_problem(&mut r, dim)
        })
        .collect()
}

/// Green matrix applied to `f` versus the direct solver on random problems.
fn green_master_oracle() -> Outcome {
    let start = Instant::now();
    let problems = corpus();
    let worst = std::thread::scope(|scope| {
        let handles: Vec<_> = problems
            .iter()
            .map(|p| {
                scope.spawn(move || {
                    let g = green_matrix(&p.a, &p.u, p.interval, 1e-10).unwrap();
                    let via_green = green_apply(&g, &p.f).unwrap();
                    let direct = solve_bvp(p, 1e-10).unwrap();
                    let gap = sup_norm(|t| &via_green.eval(t) - &direct.eval(t), p.interval, 201);
                    gap / (1e-7 * (1.0 + l1_norm(&p.f, p.interval)))
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().unwrap()).fold(0.0, f64::max)
    });
    let elapsed = start.elapsed();
    outcome(
        worst <= 1.0 && within(elapsed, 30.0),
        format!(
            "20 problems, worst gap = {worst:.2e} of the allowance, {:.1}s",
            elapsed.as_secs_f64()
        ),
    )
}

/// Liouville identity and cocycle splitting on the random corpus.
fn matrizant_integrity() -> Outcome {
    let problems = corpus();
    let mut liouville: f64 = 0.0;
    let mut cocycle: f64 = 0.0;
    for (k, p) in problems.iter().enumerate() {
        let y = matrizant(&p.a, p.interval, TOL).unwrap();
        liouville = liouville.max(y.liouville_defect(&p.a));
        let c = 0.1 + 0.8 * (k as f64 / 19.0);
        let tail = matrizant(&p.a, Interval::new(c, 1.0).unwrap(), TOL).unwrap();
        let yc = y.eval(c);
        for i in 0..=20 {
            let t = c + (1.0 - c) * i as f64 / 20.0;
            let direct = y.eval(t);
            let split = &tail.eval(t) * &yc;
            cocycle = cocycle.max(max_abs_diff(&direct, &split) / direct.abs_norm().max(1.0));
        }
    }
    outcome(
        liouville <= 1e-6 && cocycle <= 10.0 * TOL,
        format!("Liouville defect {liouville:.2e}, cocycle defect {cocycle:.2e} (10 tol = {:.0e})", 10.0 * TOL),
    )
}

/// Norm-convergent perturbation of both `A` and `U`: Green matrices move linearly in eps.
fn linear_perturbation_rate() -> Outcome {
    let s = scenario(
        r#"{"name": "linear", "interval": [0, 1], "dim": 2,
            "epsilons": [0.1, 0.0316, 0.01, 0.00316, 0.001],
            "family": {"registry": "linear_perturbation", "params": {
                "a0": {"re": [[0, 1], [-1, 0]]},
                "b": {"re": [[0.5, 0], [1, -0.5]]},
                "atom_perturbation": {"t": 0.5, "value": {"re": [[1, 0], [0, 1]]}}}},
            "boundary": {"atoms": [[0, [[1, 0], [0, 0]], [[0, 0], [0, 0]]],
                                   [1, [[0, 0], [0, 1]], [[0, 0], [0, 0]]]]}}"#,
    );
    let diffs: Vec<f64> = green_convergence(&s, 201, TOL)
        .unwrap()
        .into_iter()
        .map(|d| d.unwrap())
        .collect();
    let ratios: Vec<f64> = diffs.iter().zip(&s.epsilons).map(|(d, e)| d / e).collect();
    let (lo, hi) = ratios
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(l, h), &r| (l.min(r), h.max(r)));
    outcome(
        strictly_decreasing(&diffs) && hi / lo <= 2.0,
        format!("green_diff / eps in [{lo:.3}, {hi:.3}], spread {:.3}", hi / lo),
    )
}

/// Multipoint operators with fixed locations: variation equals the summed weight changes.
fn multipoint_equivalence() -> Outcome {
    let s = scenario(
        r#"{"name": "multipoint", "interval": [0, 1], "dim": 2, "epsilons": [0.1, 0.01, 0.001, 0.0001],
            "family": {"registry": "multipoint", "params": {
                "locations": [0, 0.3, 1],
                "b0": [{"re": [[1, 0], [0, 0]]}, {"re": [[0.5, 0.2], [0, 0.1]]}, {"re": [[0, 0], [0, 1]]}],
                "directions": [{"re": [[1, -2], [0.5, 0]], "im": [[0, 1], [0, 0]]},
                               {"re": [[0, 0], [0, 3]]},
                               {"re": [[0.25, 0], [0, 0]], "im": [[0, 0], [-1, 0]]}]}}}"#,
    );
    let mut worst: f64 = 0.0;
    for &eps in &s.epsilons {
        let p = s.problem(eps).unwrap();
        let var = p.u.variation_distance(&s.baseline.u).unwrap();
        let sum: f64 = p
            .u
            .atoms()
            .iter()
            .zip(s.baseline.u.atoms())
            .map(|(x, y)| {
                assert_eq!(x.location, y.location);
                (&x.weight - &y.weight).induced_norm()
            })
            .sum();
        worst = worst.max((var - sum).abs());
    }
    outcome(worst <= 1e-12, format!("max |variation - sum nu(dB_k)| = {worst:.1e}"))
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 7] = [
        ("example 2 reproduction", example2_reproduction),
        ("example 1 condition profile", example1_profile),
        ("example 1 solution convergence", example1_solutions),
        ("green/solve master oracle", green_master_oracle),
        ("matrizant integrity", matrizant_integrity),
        ("linear perturbation rate", linear_perturbation_rate),
        ("multipoint equivalence", multipoint_equivalence),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let o = check();
        println!(
            "criterion {} [{}] {name}: {}",
            i + 1,
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
        failed += usize::from(!o.pass);
    }
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
