//! Inhomogeneous problems `y' = A y + f`, `U y = c` and their Green matrices.
//!
//! The Green matrix is assembled from the matrizant `Y`, the transform
//! `H_Y(t) = int_a^t [dH] Y` and `H_Y(b)^{-1}`:
//!
//! ```text
//! G(t, s) = G_2(t, s) + G_1(t, s)
//! G_2(t, s) = Y(t) Y(s)^{-1}                          for s <= t, else 0
//! G_1(t, s) = -Y(t) H_Y(b)^{-1} [H_Y(b) - H_Y(s)] Y(s)^{-1}
//! ```
//!
//! The bracket is the tail `int_s^b [dH] Y` (an atom at `s` included); it is
//! what makes each column `t -> G(t, s)` satisfy `U G(., s) = 0`.

use std::io::{self, Write};
use std::sync::Arc;

use rayon::prelude::*;

use crate::boundary::{BoundaryMeasure, HTransform};
use crate::error::{Error, Result};
use crate::linalg::{AbsNorm, CMat, CVec, C64};
use crate::ode::{cauchy_solution, matrizant, CoeffFn, Func, Interval, Matrizant, VecFn};
use crate::quadrature::{integrate, QuadOptions};
use crate::report::fmt_num;

/// Relative determinant threshold for well-posedness.
pub const WELLPOSED_RTOL: f64 = 1e-10;

/// `y' = A(t) y + f(t)`, `U y = c` on `[a, b]`.
#[derive(Clone, Debug)]
pub struct BVProblem {
    pub interval: Interval,
    pub a: CoeffFn,
    pub f: VecFn,
    pub u: BoundaryMeasure,
    pub c: CVec,
}

impl BVProblem {
    pub fn new(interval: Interval, a: CoeffFn, f: VecFn, u: BoundaryMeasure, c: CVec) -> Result<Self> {
        let m = a.dim();
        for found in [f.dim(), u.dim(), c.dim()] {
            if found != m {
                return Err(Error::DimensionMismatch { expected: m, found });
            }
        }
        if u.interval() != interval {
            return Err(Error::InvalidArgument(
                "boundary operator interval differs from the problem interval".into(),
            ));
        }
        Ok(Self { interval, a, f, u, c })
    }

    pub fn dim(&self) -> usize {
        self.a.dim()
    }

    /// Same problem with `f = 0` and `c = 0` replaced as requested.
    pub fn with_rhs(&self, f: VecFn, c: CVec) -> Result<Self> {
        Self::new(self.interval, self.a.clone(), f, self.u.clone(), c)
    }
}

/// `1e-10 * prod_i (row abs-sum of M)`: scale-invariant singularity threshold.
pub fn wellposed_threshold(characteristic: &CMat) -> f64 {
    WELLPOSED_RTOL * characteristic.row_abs_sums().iter().product::<f64>()
}

/// Characteristic matrix `[U Y]` together with its determinant.
#[derive(Clone, Debug)]
pub struct Wellposedness {
    pub characteristic: CMat,
    pub det: C64,
    pub threshold: f64,
}

impl Wellposedness {
    pub fn is_wellposed(&self) -> bool {
        self.det.norm() > self.threshold
    }
}

fn assess(characteristic: CMat) -> Wellposedness {
    let det = characteristic.det();
    let threshold = wellposed_threshold(&characteristic);
    Wellposedness {
        characteristic,
        det,
        threshold,
    }
}

/// `det [U Y]`.
pub fn check_wellposed(a: &CoeffFn, u: &BoundaryMeasure, interval: Interval, tol: f64) -> Result<C64> {
    Ok(wellposedness(a, u, interval, tol)?.det)
}

pub fn wellposedness(a: &CoeffFn, u: &BoundaryMeasure, interval: Interval, tol: f64) -> Result<Wellposedness> {
    let y = matrizant(a, interval, tol)?;
    Ok(assess(u.apply_to_matrix(&y)?))
}

/// Solution of a boundary value problem.
#[derive(Clone, Debug)]
pub struct BvpSolution {
    pub y: VecFn,
    pub det: C64,
    /// `|U y - c|` measured after assembly.
    pub residual: f64,
}

impl BvpSolution {
    pub fn eval(&self, t: f64) -> CVec {
        self.y.eval(t)
    }
}

/// Solves via `y = Y c~ + x` where `x` solves the Cauchy problem `x(a) = 0`
/// and `[U Y] c~ = c - U x`.
pub fn solve_bvp(p: &BVProblem, tol: f64) -> Result<BvpSolution> {
    let y_mat = matrizant(&p.a, p.interval, tol)?;
    let w = assess(p.u.apply_to_matrix(&y_mat)?);
    if !w.is_wellposed() {
        return Err(Error::NonUnique {
            det_abs: w.det.norm(),
            threshold: w.threshold,
        });
    }
    let x = cauchy_solution(&p.a, &p.f, p.interval, tol)?;
    let ux = p.u.apply(&x)?;
    let c_tilde = w.characteristic.solve(&(&p.c - &ux))?;

    let ym = y_mat.clone();
    let xs = x.clone();
    let mut bps = p.a.breakpoints().to_vec();
    bps.extend_from_slice(p.f.breakpoints());
    let mut y = Func::new(p.dim(), move |t| &ym.eval(t).mul_vec(&c_tilde) + &xs.eval(t)).with_breakpoints(bps);
    if let Some(s) = x.oscillation_scale() {
        y = y.with_oscillation_scale(s);
    }
    let residual = (&p.u.apply(&y)? - &p.c).abs_norm();
    let limit = 1e-7 * (1.0 + p.c.abs_norm());
    if residual > limit {
        return Err(Error::Residual { residual, limit });
    }
    Ok(BvpSolution { y, det: w.det, residual })
}

/// Green matrix of `y' = A y + f`, `U y = 0`, evaluated lazily.
#[derive(Clone)]
pub struct GreenMatrix {
    y: Matrizant,
    hy: HTransform,
    hyb_inv: CMat,
    det: C64,
    atoms: Vec<f64>,
    breakpoints: Vec<f64>,
    scale: Option<f64>,
}

/// Precomputed `Y(t)`, `Y(s)^{-1}` and tails on a grid, for tabulation.
struct Slices {
    y_t: Vec<CMat>,
    s_terms: Vec<(CMat, CMat)>,
}

pub fn green_matrix(a: &CoeffFn, u: &BoundaryMeasure, interval: Interval, tol: f64) -> Result<GreenMatrix> {
    if a.dim() != u.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            found: u.dim(),
        });
    }
    let y = matrizant(a, interval, tol)?;
    let hy = u.h_transform(&y)?;
    let w = assess(hy.at_end_inclusive().clone());
    if !w.is_wellposed() {
        return Err(Error::SingularBoundary {
            det_abs: w.det.norm(),
            threshold: w.threshold,
        });
    }
    let hyb_inv = w.characteristic.inverse()?;
    let atoms = u.atoms().iter().map(|x| x.location).collect();
    let mut breakpoints = a.breakpoints().to_vec();
    if let Some(phi) = u.density() {
        breakpoints.extend_from_slice(phi.breakpoints());
    }
    let scale = match (a.oscillation_scale(), u.density().and_then(|d| d.oscillation_scale())) {
        (Some(x), Some(z)) => Some(x.min(z)),
        (x, z) => x.or(z),
    };
    Ok(GreenMatrix {
        y,
        hy,
        hyb_inv,
        det: w.det,
        atoms,
        breakpoints,
        scale,
    })
}

impl GreenMatrix {
    pub fn dim(&self) -> usize {
        self.y.dim()
    }

    pub fn interval(&self) -> Interval {
        self.y.interval()
    }

    pub fn matrizant(&self) -> &Matrizant {
        &self.y
    }

    pub fn h_transform(&self) -> &HTransform {
        &self.hy
    }

    pub fn hyb_inv(&self) -> &CMat {
        &self.hyb_inv
    }

    /// `det H_Y(b)`.
    pub fn det(&self) -> C64 {
        self.det
    }

    /// Atom locations of the boundary measure (s-direction discontinuities).
    pub fn atom_locations(&self) -> &[f64] {
        &self.atoms
    }

    /// `-H_Y(b)^{-1} [H_Y(b) - H_Y(s)] Y(s)^{-1}` and `Y(s)^{-1}`.
    fn s_terms(&self, s: f64) -> Result<(CMat, CMat)> {
        let y_inv = self.y.inverse_at(s)?;
        let tail = self.hy.tail(s);
        let g1 = -(&(&self.hyb_inv * &tail) * &y_inv);
        Ok((g1, y_inv))
    }

    pub fn g1(&self, t: f64, s: f64) -> Result<CMat> {
        Ok(&self.y.eval(t) * &self.s_terms(s)?.0)
    }

    pub fn g2(&self, t: f64, s: f64) -> Result<CMat> {
        if s <= t {
            Ok(&self.y.eval(t) * &self.y.inverse_at(s)?)
        } else {
            Ok(CMat::zeros(self.dim()))
        }
    }

    /// `G(t, s)`; on the diagonal the `s <= t` branch applies.
    pub fn try_eval(&self, t: f64, s: f64) -> Result<CMat> {
        let (g1, y_inv) = self.s_terms(s)?;
        let inner = if s <= t { &g1 + &y_inv } else { g1 };
        Ok(&self.y.eval(t) * &inner)
    }

    /// Panics only if the matrizant is numerically singular at `s`.
    pub fn eval(&self, t: f64, s: f64) -> CMat {
        self.try_eval(t, s).expect("matrizant is invertible")
    }

    fn slices(&self, ts: &[f64], ss: &[f64]) -> Result<Slices> {
        let y_t = ts.par_iter().map(|&t| self.y.eval(t)).collect();
        let s_terms = ss
            .par_iter()
            .map(|&s| self.s_terms(s))
            .collect::<Result<Vec<_>>>()?;
        Ok(Slices { y_t, s_terms })
    }

    /// `G(t_i, s_j)` for every pair; rows are computed in parallel.
    pub fn tabulate(&self, ts: &[f64], ss: &[f64]) -> Result<Vec<Vec<CMat>>> {
        let sl = self.slices(ts, ss)?;
        Ok(ts
            .par_iter()
            .zip(&sl.y_t)
            .map(|(&t, yt)| {
                ss.iter()
                    .zip(&sl.s_terms)
                    .map(|(&s, (g1, y_inv))| {
                        let inner = if s <= t { g1 + y_inv } else { g1.clone() };
                        yt * &inner
                    })
                    .collect()
            })
            .collect())
    }

    /// CSV grid export: `t,s,g_11_re,g_11_im,...` in row-major entry order.
    pub fn write_grid_csv<W: Write>(&self, out: &mut W, ts: &[f64], ss: &[f64]) -> Result<io::Result<()>> {
        let table = self.tabulate(ts, ss)?;
        Ok(write_grid(out, self.dim(), ts, ss, &table))
    }
}

pub fn entry_label(i: usize, j: usize, dim: usize) -> String {
    if dim < 10 {
        format!("{}{}", i + 1, j + 1)
    } else {
        format!("{}_{}", i + 1, j + 1)
    }
}

fn write_grid<W: Write>(out: &mut W, m: usize, ts: &[f64], ss: &[f64], table: &[Vec<CMat>]) -> io::Result<()> {
    let mut header = String::from("t,s");
    for i in 0..m {
        for j in 0..m {
            let l = entry_label(i, j, m);
            header.push_str(&format!(",g_{l}_re,g_{l}_im"));
        }
    }
    writeln!(out, "{header}")?;
    for (row, &t) in table.iter().zip(ts) {
        for (g, &s) in row.iter().zip(ss) {
            let mut line = format!("{},{}", fmt_num(t), fmt_num(s));
            for z in g.as_slice() {
                line.push(',');
                line.push_str(&fmt_num(z.re));
                line.push(',');
                line.push_str(&fmt_num(z.im));
            }
            writeln!(out, "{line}")?;
        }
    }
    Ok(())
}

/// `y(t) = int_a^b G(t, s) f(s) ds`, integrated panel-wise with cuts at `t`
/// and at every atom of the boundary measure.
pub fn green_apply(g: &GreenMatrix, f: &VecFn) -> Result<VecFn> {
    if f.dim() != g.dim() {
        return Err(Error::DimensionMismatch {
            expected: g.dim(),
            found: f.dim(),
        });
    }
    let interval = g.interval();
    let mut cuts = g.atoms.clone();
    cuts.extend_from_slice(&g.breakpoints);
    cuts.extend_from_slice(f.breakpoints());
    let scale = match (g.scale, f.oscillation_scale()) {
        (Some(x), Some(z)) => Some(x.min(z)),
        (x, z) => x.or(z),
    };
    let cap = scale.map_or(interval.length() / 8.0, |s| (interval.length() / 8.0).min(s / 4.0));
    let opts = QuadOptions::with_tol(1e-14, 1e-11).max_panel(Some(cap));
    let (gm, fc) = (Arc::new(g.clone()), f.clone());
    let cuts_arc = Arc::new(cuts.clone());
    let m = g.dim();
    let mut out = Func::new(m, move |t: f64| {
        let mut bps = cuts_arc.as_ref().clone();
        bps.push(t);
        // Y(t) is constant in s and factors out of the integral.
        let q = integrate(
            |s| {
                let (g1, y_inv) = gm.s_terms(s).expect("matrizant is invertible");
                let fs = fc.eval(s);
                let mut v = g1.mul_vec(&fs);
                if s <= t {
                    v += &y_inv.mul_vec(&fs);
                }
                v
            },
            interval.a,
            interval.b,
            &bps,
            opts,
        );
        gm.y.eval(t).mul_vec(&q.value)
    })
    .with_breakpoints(cuts);
    if let Some(s) = scale {
        out = out.with_oscillation_scale(s);
    }
    Ok(out)
}
