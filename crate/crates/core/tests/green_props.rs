mod common;

use common::{max_abs_diff, random_problem, rng};
use parabvp::ode::{l1_norm, sup_norm};
use parabvp::{green_apply, green_matrix, solve_bvp, AbsNorm, CMat, CVec, Func, Interval, VecFn};
use proptest::prelude::*;

const TOL: f64 = 1e-10;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn green_apply_agrees_with_direct_solve(seed in any::<u64>(), dim in 1usize..=3) {
        let p = random_problem(&mut rng(seed), dim);
        let g = green_matrix(&p.a, &p.u, p.interval, TOL).unwrap();
        let via_green = green_apply(&g, &p.f).unwrap();
        let direct = solve_bvp(&p, TOL).unwrap();
        let gap = sup_norm(|t| &via_green.eval(t) - &direct.eval(t), p.interval, 201);
        prop_assert!(gap <= 1e-7 * (1.0 + l1_norm(&p.f, p.interval)), "gap {gap}");
    }

    #[test]
    fn diagonal_jump_is_identity(seed in any::<u64>(), dim in 1usize..=3, t in 0.05f64..0.95) {
        let p = random_problem(&mut rng(seed), dim);
        let g = green_matrix(&p.a, &p.u, p.interval, TOL).unwrap();
        prop_assume!(g.atom_locations().iter().all(|&x| (x - t).abs() > 1e-3));
        let h = 1e-4;
        let jump = &g.eval(t + h, t) - &g.eval(t - h, t);
        prop_assert!(max_abs_diff(&jump, &CMat::identity(dim)) <= 1e-2);
    }

    #[test]
    fn columns_satisfy_homogeneous_condition(seed in any::<u64>(), dim in 1usize..=3, s0 in 0.05f64..0.95) {
        let p = random_problem(&mut rng(seed), dim);
        let g = green_matrix(&p.a, &p.u, p.interval, TOL).unwrap();
        prop_assume!(g.atom_locations().iter().all(|&x| (x - s0).abs() > 1e-3));
        for j in 0..dim {
            let gg = g.clone();
            let column: VecFn = Func::new(dim, move |t| gg.eval(t, s0).column(j)).with_breakpoints(vec![s0]);
            let residual = p.u.apply(&column).unwrap().abs_norm();
            prop_assert!(residual <= 1e-7, "column {j}: {residual}");
        }
    }
}

#[test]
fn zero_forcing_gives_zero_solution() {
    let p = random_problem(&mut rng(11), 2);
    let g = green_matrix(&p.a, &p.u, p.interval, TOL).unwrap();
    let y = green_apply(&g, &VecFn::zero(2)).unwrap();
    for t in Interval::unit().grid(11) {
        assert_eq!(y.eval(t).abs_norm(), 0.0);
    }
    let homogeneous = p.with_rhs(VecFn::zero(2), CVec::zeros(2)).unwrap();
    let y = solve_bvp(&homogeneous, TOL).unwrap();
    assert!(sup_norm(|t| y.eval(t), p.interval, 101) <= 1e-14);
}
