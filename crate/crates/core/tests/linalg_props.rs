use parabvp::{AbsNorm, CMat, C64};
use proptest::prelude::*;

fn mat(dim: usize) -> impl Strategy<Value = CMat> {
    prop::collection::vec(-1.0f64..1.0, 2 * dim * dim).prop_map(move |v| {
        let data = v.chunks(2).map(|c| C64::new(c[0], c[1])).collect();
        CMat::from_row_major(dim, data).unwrap()
    })
}

fn sized_pair() -> impl Strategy<Value = (CMat, CMat)> {
    (1usize..=6).prop_flat_map(|n| (mat(n), mat(n)))
}

fn rel(x: &CMat, y: &CMat) -> f64 {
    (x - y).abs_norm() / y.abs_norm().max(f64::MIN_POSITIVE)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn abs_norm_is_submultiplicative((a, b) in sized_pair()) {
        prop_assert!((&a * &b).abs_norm() <= a.abs_norm() * b.abs_norm() * (1.0 + 1e-14));
    }

    #[test]
    fn induced_norm_is_submultiplicative((a, b) in sized_pair()) {
        prop_assert!((&a * &b).induced_norm() <= a.induced_norm() * b.induced_norm() * (1.0 + 1e-14));
    }

    #[test]
    fn solve_undoes_multiplication((m, x) in sized_pair()) {
        let Ok(inv) = m.inverse() else { return Ok(()) };
        prop_assume!(m.abs_norm() * inv.abs_norm() < 1e4);
        let back = m.solve_mat(&(&m * &x)).unwrap();
        prop_assert!(rel(&back, &x) <= 1e-10, "relative error {}", rel(&back, &x));
    }

    #[test]
    fn inverse_is_two_sided((m, _x) in sized_pair()) {
        let Ok(inv) = m.inverse() else { return Ok(()) };
        prop_assume!(m.abs_norm() * inv.abs_norm() < 1e4);
        let id = CMat::identity(m.dim());
        prop_assert!((&(&m * &inv) - &id).abs_norm() <= 1e-10);
        prop_assert!((&(&inv * &m) - &id).abs_norm() <= 1e-10);
    }

    #[test]
    fn det_is_multiplicative_on_5x5(a in mat(5), b in mat(5)) {
        let lhs = (&a * &b).det();
        let rhs = a.det() * b.det();
        let scale = rhs.norm().max(1e-300);
        prop_assert!((lhs - rhs).norm() <= 1e-10 * scale, "{lhs} vs {rhs}");
    }
}

#[test]
fn singular_matrices_are_rejected() {
    let m = CMat::from_real(&[&[1.0, 2.0], &[2.0, 4.0]]);
    assert!(matches!(m.inverse(), Err(parabvp::Error::Singular { .. })));
    assert_eq!(m.det(), C64::new(0.0, 0.0));
}
