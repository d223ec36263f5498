mod common;

use common::{random_boundary, random_forcing, random_mat, rng};
use parabvp::lab::probe_basis;
use parabvp::ode::{matrizant, sup_norm};
use parabvp::{AbsNorm, BoundaryMeasure, CMat, CoeffFn, Func, Interval};
use proptest::prelude::*;
use rand::Rng;

fn random_multipoint(r: &mut impl Rng, dim: usize, n: usize) -> BoundaryMeasure {
    let i = Interval::unit();
    let atoms = (0..n)
        .map(|_| ((r.gen_range(0..=8) as f64) / 8.0, random_mat(r, dim, 1.0)))
        .collect();
    BoundaryMeasure::new(i, dim, atoms, None).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn variation_distance_obeys_triangle(seed in any::<u64>(), dim in 1usize..=3) {
        let mut r = rng(seed);
        let u1 = random_boundary(&mut r, Interval::unit(), dim);
        let u2 = random_multipoint(&mut r, dim, 3);
        let u3 = random_boundary(&mut r, Interval::unit(), dim);
        let d12 = u1.variation_distance(&u2).unwrap();
        let d23 = u2.variation_distance(&u3).unwrap();
        let d13 = u1.variation_distance(&u3).unwrap();
        prop_assert!(d13 <= (d12 + d23) * (1.0 + 1e-9), "{d13} > {d12} + {d23}");
    }

    #[test]
    fn application_is_bounded_by_operator_norm(seed in any::<u64>(), dim in 1usize..=3) {
        let mut r = rng(seed);
        let u = random_boundary(&mut r, Interval::unit(), dim);
        let y = random_forcing(&mut r, dim);
        let uy = u.apply(&y).unwrap().abs_norm();
        let sup = sup_norm(|t| y.eval(t), Interval::unit(), 2001);
        prop_assert!(uy <= u.operator_norm() * sup * (1.0 + 1e-9));
    }

    #[test]
    fn probe_is_bounded_by_variation(seed in any::<u64>(), dim in 1usize..=3) {
        let mut r = rng(seed);
        let u = random_boundary(&mut r, Interval::unit(), dim);
        let v = random_multipoint(&mut r, dim, 4);
        let probes = probe_basis(dim);
        let max_sup = probes
            .iter()
            .map(|p| sup_norm(|t| p.eval(t), Interval::unit(), 2001))
            .fold(0.0, f64::max);
        let probe = u.strong_convergence_probe(&v, &probes).unwrap();
        let var = u.variation_distance(&v).unwrap();
        prop_assert!(probe <= var * max_sup * (1.0 + 1e-9));
    }

    #[test]
    fn fixed_location_variation_is_sum_of_weight_changes(seed in any::<u64>(), dim in 1usize..=3, eps in 1e-6f64..1.0) {
        let mut r = rng(seed);
        let locs = [0.0, 0.3, 0.7, 1.0];
        let b0: Vec<CMat> = locs.iter().map(|_| random_mat(&mut r, dim, 1.0)).collect();
        let c: Vec<CMat> = locs.iter().map(|_| random_mat(&mut r, dim, 1.0)).collect();
        let be: Vec<CMat> = b0.iter().zip(&c).map(|(b, c)| {
            let mut w = b.clone();
            w.axpy(eps.into(), c);
            w
        }).collect();
        let cmp = parabvp::lab::multipoint_equivalence(Interval::unit(), &locs, &b0, &be).unwrap();
        prop_assert!((cmp.variation - cmp.sum_weight_change).abs() <= 1e-12);
        prop_assert!(cmp.max_weight_change <= cmp.variation);
    }
}

#[test]
fn apply_to_matrix_matches_columnwise_apply() {
    let mut r = rng(3);
    let a = common::random_coeff(&mut r, 2);
    let y = matrizant(&a, Interval::unit(), 1e-10).unwrap();
    let u = BoundaryMeasure::multipoint(
        Interval::unit(),
        vec![(0.2, random_mat(&mut r, 2, 1.0)), (0.9, random_mat(&mut r, 2, 1.0))],
    )
    .unwrap();
    let via_matrix = u.apply_to_matrix(&y).unwrap();
    let yy = y.clone();
    let as_fn: CoeffFn = Func::new(2, move |t| yy.eval(t));
    let columnwise = u.apply_columns(&as_fn).unwrap();
    let expected = &(&u.atoms()[0].weight * &y.eval(0.2)) + &(&u.atoms()[1].weight * &y.eval(0.9));
    assert!(common::max_abs_diff(&via_matrix, &columnwise) <= 1e-10);
    assert!(common::max_abs_diff(&via_matrix, &expected) <= 1e-10);
    let h = u.h_transform(&y).unwrap();
    assert_eq!(h.at_end_inclusive(), &via_matrix);
}
