//! Adaptive Gauss-Kronrod (7/15) quadrature over scalar, vector and matrix
//! valued integrands.
//!
//! The interval is first cut at the supplied breakpoints and into panels no
//! wider than `max_panel`, then the panel with the largest error estimate is
//! bisected until the summed estimate meets the tolerance. Oscillatory
//! integrands (|cos(t/eps)| with kinks every pi*eps) need the panel cap: a
//! handful of wide initial panels would alias.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::linalg::{AbsNorm, CMat, CVec};

/// Values that can be accumulated by the quadrature rules.
pub trait QuadValue: Clone {
    fn zero_like(&self) -> Self;
    fn add_scaled(&mut self, w: f64, other: &Self);
    /// Entrywise-sum distance between two values.
    fn dist(&self, other: &Self) -> f64;
    fn size(&self) -> f64;
}

impl QuadValue for f64 {
    fn zero_like(&self) -> Self {
        0.0
    }
    fn add_scaled(&mut self, w: f64, other: &Self) {
        *self += w * other;
    }
    fn dist(&self, other: &Self) -> f64 {
        (self - other).abs()
    }
    fn size(&self) -> f64 {
        self.abs()
    }
}

impl QuadValue for CMat {
    fn zero_like(&self) -> Self {
        CMat::zeros(self.dim())
    }
    fn add_scaled(&mut self, w: f64, other: &Self) {
        for (a, b) in self.as_mut_slice().iter_mut().zip(other.as_slice()) {
            *a += b * w;
        }
    }
    fn dist(&self, other: &Self) -> f64 {
        self.as_slice()
            .iter()
            .zip(other.as_slice())
            .map(|(a, b)| (a - b).norm())
            .sum()
    }
    fn size(&self) -> f64 {
        self.abs_norm()
    }
}

impl QuadValue for CVec {
    fn zero_like(&self) -> Self {
        CVec::zeros(self.dim())
    }
    fn add_scaled(&mut self, w: f64, other: &Self) {
        for (a, b) in self.as_mut_slice().iter_mut().zip(other.as_slice()) {
            *a += b * w;
        }
    }
    fn dist(&self, other: &Self) -> f64 {
        self.as_slice()
            .iter()
            .zip(other.as_slice())
            .map(|(a, b)| (a - b).norm())
            .sum()
    }
    fn size(&self) -> f64 {
        self.abs_norm()
    }
}

// Kronrod abscissae on [0, 1]; odd indices are the embedded Gauss points.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// One 15-point Kronrod estimate with its |K15 - G7| error.
pub fn gk15<T: QuadValue, F: FnMut(f64) -> T>(f: &mut F, a: f64, b: f64) -> (T, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kron = fc.zero_like();
    let mut gauss = fc.zero_like();
    kron.add_scaled(WGK[7], &fc);
    gauss.add_scaled(WG[3], &fc);
    for (j, (&x, &w)) in XGK.iter().zip(&WGK).take(7).enumerate() {
        let dx = half * x;
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        kron.add_scaled(w, &f1);
        kron.add_scaled(w, &f2);
        if j % 2 == 1 {
            gauss.add_scaled(WG[j / 2], &f1);
            gauss.add_scaled(WG[j / 2], &f2);
        }
    }
    let err = kron.dist(&gauss) * half.abs();
    let mut value = kron.zero_like();
    value.add_scaled(half, &kron);
    (value, err)
}

#[derive(Clone, Copy, Debug)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    /// Initial panel width cap (e.g. a quarter of the oscillation scale).
    pub max_panel: Option<f64>,
    pub max_intervals: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self {
            abs_tol: 1e-12,
            rel_tol: 1e-10,
            max_panel: None,
            max_intervals: 2_000_000,
        }
    }
}

impl QuadOptions {
    pub fn with_tol(abs_tol: f64, rel_tol: f64) -> Self {
        Self {
            abs_tol,
            rel_tol,
            ..Self::default()
        }
    }

    pub fn max_panel(mut self, width: Option<f64>) -> Self {
        self.max_panel = width.filter(|w| *w > 0.0 && w.is_finite());
        self
    }
}

#[derive(Clone, Debug)]
pub struct Quadrature<T> {
    pub value: T,
    pub error: f64,
    pub intervals: usize,
}

struct Panel<T> {
    a: f64,
    b: f64,
    value: T,
    error: f64,
}

#[derive(PartialEq)]
struct Ranked(f64, usize);

impl Eq for Ranked {}

impl PartialOrd for Ranked {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Ranked {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0).then(other.1.cmp(&self.1))
    }
}

/// Panel edges covering `[a, b]`: cut at interior breakpoints, then split
/// uniformly so no panel exceeds `max_panel`.
pub fn panel_edges(a: f64, b: f64, breakpoints: &[f64], max_panel: Option<f64>) -> Vec<f64> {
    let mut cuts: Vec<f64> = breakpoints
        .iter()
        .copied()
        .filter(|&t| t > a && t < b)
        .collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut coarse = Vec::with_capacity(cuts.len() + 2);
    coarse.push(a);
    coarse.extend(cuts);
    coarse.push(b);

    let mut edges = vec![a];
    for w in coarse.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        let pieces = match max_panel {
            Some(h) => ((hi - lo) / h).ceil().max(1.0) as usize,
            None => 1,
        };
        for k in 1..pieces {
            edges.push(lo + (hi - lo) * k as f64 / pieces as f64);
        }
        edges.push(hi);
    }
    edges
}

/// Adaptive integration of `f` over `[a, b]`.
///
/// `a > b` returns the negated integral over `[b, a]`.
pub fn integrate<T, F>(mut f: F, a: f64, b: f64, breakpoints: &[f64], opts: QuadOptions) -> Quadrature<T>
where
    T: QuadValue,
    F: FnMut(f64) -> T,
{
    if a > b {
        let mut q = integrate(f, b, a, breakpoints, opts);
        let zero = q.value.zero_like();
        let mut neg = zero;
        neg.add_scaled(-1.0, &q.value);
        q.value = neg;
        return q;
    }
    if a == b {
        let probe = f(a);
        return Quadrature {
            value: probe.zero_like(),
            error: 0.0,
            intervals: 0,
        };
    }

    let edges = panel_edges(a, b, breakpoints, opts.max_panel);
    let mut panels: Vec<Panel<T>> = Vec::with_capacity(edges.len());
    let mut heap = BinaryHeap::with_capacity(edges.len());
    let mut total_err = 0.0;
    for w in edges.windows(2) {
        let (value, error) = gk15(&mut f, w[0], w[1]);
        total_err += error;
        heap.push(Ranked(error, panels.len()));
        panels.push(Panel {
            a: w[0],
            b: w[1],
            value,
            error,
        });
    }
    let mut total = panels[0].value.zero_like();
    for p in &panels {
        total.add_scaled(1.0, &p.value);
    }

    let target = |total: &T| opts.abs_tol.max(opts.rel_tol * total.size());
    while total_err > target(&total) && panels.len() < opts.max_intervals {
        let Some(Ranked(_, idx)) = heap.pop() else {
            break;
        };
        let (lo, hi) = (panels[idx].a, panels[idx].b);
        let mid = 0.5 * (lo + hi);
        if !(mid > lo && mid < hi) {
            // Panel at floating-point resolution; drop it from refinement.
            continue;
        }
        let (v1, e1) = gk15(&mut f, lo, mid);
        let (v2, e2) = gk15(&mut f, mid, hi);
        total.add_scaled(-1.0, &panels[idx].value);
        total.add_scaled(1.0, &v1);
        total.add_scaled(1.0, &v2);
        total_err += e1 + e2 - panels[idx].error;
        panels[idx] = Panel {
            a: lo,
            b: mid,
            value: v1,
            error: e1,
        };
        heap.push(Ranked(e1, idx));
        heap.push(Ranked(e2, panels.len()));
        panels.push(Panel {
            a: mid,
            b: hi,
            value: v2,
            error: e2,
        });
    }

    // Re-sum in position order so the result does not depend on refinement history.
    panels.sort_by(|p, q| p.a.total_cmp(&q.a));
    let mut value = panels[0].value.zero_like();
    let mut error = 0.0;
    for p in &panels {
        value.add_scaled(1.0, &p.value);
        error += p.error;
    }
    Quadrature {
        value,
        error,
        intervals: panels.len(),
    }
}
