//! Seeded random problem corpus shared by the integration tests.
#![allow(dead_code)]

use parabvp::green::wellposedness;
use parabvp::{BVProblem, BoundaryMeasure, CMat, CVec, CoeffFn, Func, Interval, VecFn, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_c64(r: &mut impl Rng, scale: f64) -> C64 {
    C64::new(r.gen_range(-scale..scale), r.gen_range(-scale..scale))
}

pub fn random_mat(r: &mut impl Rng, dim: usize, scale: f64) -> CMat {
    let data = (0..dim * dim).map(|_| random_c64(r, scale)).collect();
    CMat::from_row_major(dim, data).unwrap()
}

pub fn random_vec(r: &mut impl Rng, dim: usize, scale: f64) -> CVec {
    CVec::from_vec((0..dim).map(|_| random_c64(r, scale)).collect())
}

/// `A(t) = A0 + A1 cos(w t) + A2 t`
pub fn random_coeff(r: &mut impl Rng, dim: usize) -> CoeffFn {
    let (a0, a1, a2) = (random_mat(r, dim, 1.0), random_mat(r, dim, 1.0), random_mat(r, dim, 0.5));
    let w = r.gen_range(1.0..6.0);
    Func::new(dim, move |t| {
        let mut m = a0.clone();
        m.axpy(C64::new((w * t).cos(), 0.0), &a1);
        m.axpy(C64::new(t, 0.0), &a2);
        m
    })
}

/// `f(t) = f0 + f1 sin(w t) + f2 t^2`
pub fn random_forcing(r: &mut impl Rng, dim: usize) -> VecFn {
    let (f0, f1, f2) = (random_vec(r, dim, 1.0), random_vec(r, dim, 1.0), random_vec(r, dim, 1.0));
    let w = r.gen_range(1.0..6.0);
    Func::new(dim, move |t| {
        let (s, q) = (C64::new((w * t).sin(), 0.0), C64::new(t * t, 0.0));
        CVec::from_vec((0..dim).map(|i| f0[i] + f1[i] * s + f2[i] * q).collect())
    })
}

/// Atoms at `a`, one interior point and `b`, plus a trigonometric density.
pub fn random_boundary(r: &mut impl Rng, interval: Interval, dim: usize) -> BoundaryMeasure {
    let mid = r.gen_range(interval.a + 0.1..interval.b - 0.1);
    let atoms = vec![
        (interval.a, random_mat(r, dim, 1.0)),
        (mid, random_mat(r, dim, 0.5)),
        (interval.b, random_mat(r, dim, 1.0)),
    ];
    let (p0, p1) = (random_mat(r, dim, 0.5), random_mat(r, dim, 0.5));
    let density = Func::new(dim, move |t| {
        let mut m = p0.clone();
        m.axpy(C64::new((2.0 * t).sin(), 0.0), &p1);
        m
    });
    BoundaryMeasure::new(interval, dim, atoms, Some(density)).unwrap()
}

/// A well-posed problem with `c = 0`, drawn until `|det [UY]|` is comfortably
/// above the threshold.
pub fn random_problem(r: &mut impl Rng, dim: usize) -> BVProblem {
    let interval = Interval::unit();
    loop {
        let a = random_coeff(r, dim);
        let u = random_boundary(r, interval, dim);
        let w = wellposedness(&a, &u, interval, 1e-10).unwrap();
        if w.det.norm() > 1e4 * w.threshold {
            let f = random_forcing(r, dim);
            return BVProblem::new(interval, a, f, u, CVec::zeros(dim)).unwrap();
        }
    }
}

pub fn max_abs_diff(x: &CMat, y: &CMat) -> f64 {
    x.as_slice()
        .iter()
        .zip(y.as_slice())
        .map(|(p, q)| (p - q).norm())
        .fold(0.0, f64::max)
}
