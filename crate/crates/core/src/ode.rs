//! Matrizants, Cauchy problems and the functional norms on `[a, b]`.
//!
//! Integration uses the Dormand-Prince 5(4) pair with proportional-integral
//! step control. Steps land exactly on declared coefficient breakpoints and
//! never exceed `oscillation_scale / 20`. Dense values between accepted nodes
//! are produced by one fixed fifth-order step from the nearest node to the left.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::{AbsNorm, CMat, CVec, C64};
use crate::quadrature::{integrate, panel_edges, QuadOptions, QuadValue};

/// Closed interval `[a, b]` with `a < b`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Interval {
    pub a: f64,
    pub b: f64,
}

impl Interval {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(Error::InvalidArgument(format!(
                "interval requires finite a < b, got [{a}, {b}]"
            )));
        }
        Ok(Self { a, b })
    }

    pub fn unit() -> Self {
        Self { a: 0.0, b: 1.0 }
    }

    pub fn length(&self) -> f64 {
        self.b - self.a
    }

    pub fn contains(&self, t: f64) -> bool {
        t >= self.a && t <= self.b
    }

    /// `n` equally spaced points including both endpoints.
    pub fn grid(&self, n: usize) -> Vec<f64> {
        assert!(n >= 2, "grid needs at least two points");
        (0..n)
            .map(|i| {
                if i + 1 == n {
                    self.b
                } else {
                    self.a + self.length() * i as f64 / (n - 1) as f64
                }
            })
            .collect()
    }

    /// Cell midpoints of an `n`-cell uniform partition.
    pub fn midpoints(&self, n: usize) -> Vec<f64> {
        (0..n)
            .map(|i| self.a + self.length() * (i as f64 + 0.5) / n as f64)
            .collect()
    }
}

/// A time-dependent coefficient `t -> T` together with the metadata the
/// integrators and quadratures need.
pub struct Func<T> {
    dim: usize,
    eval: Arc<dyn Fn(f64) -> T + Send + Sync>,
    oscillation_scale: Option<f64>,
    l1_bound: Option<f64>,
    breakpoints: Vec<f64>,
}

/// Matrix coefficient such as `A(t; eps)` or `R(t; eps)`.
pub type CoeffFn = Func<CMat>;
/// Vector coefficient such as `f(t; eps)`.
pub type VecFn = Func<CVec>;

impl<T> Clone for Func<T> {
    fn clone(&self) -> Self {
        Self {
            dim: self.dim,
            eval: Arc::clone(&self.eval),
            oscillation_scale: self.oscillation_scale,
            l1_bound: self.l1_bound,
            breakpoints: self.breakpoints.clone(),
        }
    }
}

impl<T> std::fmt::Debug for Func<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Func")
            .field("dim", &self.dim)
            .field("oscillation_scale", &self.oscillation_scale)
            .field("breakpoints", &self.breakpoints)
            .finish_non_exhaustive()
    }
}

impl<T: 'static> Func<T> {
    pub fn new(dim: usize, eval: impl Fn(f64) -> T + Send + Sync + 'static) -> Self {
        assert!(dim >= 1, "coefficient dimension must be positive");
        Self {
            dim,
            eval: Arc::new(eval),
            oscillation_scale: None,
            l1_bound: None,
            breakpoints: Vec::new(),
        }
    }

    /// Smallest feature length of the coefficient; must be positive.
    pub fn with_oscillation_scale(mut self, scale: f64) -> Self {
        assert!(scale > 0.0 && scale.is_finite(), "oscillation scale must be positive");
        self.oscillation_scale = Some(scale);
        self
    }

    pub fn with_l1_bound(mut self, bound: f64) -> Self {
        self.l1_bound = Some(bound);
        self
    }

    /// Points where the coefficient may jump; integrators step onto them exactly.
    pub fn with_breakpoints(mut self, mut points: Vec<f64>) -> Self {
        points.retain(|t| t.is_finite());
        points.sort_by(f64::total_cmp);
        points.dedup();
        self.breakpoints = points;
        self
    }

    #[inline]
    pub fn eval(&self, t: f64) -> T {
        (self.eval)(t)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn oscillation_scale(&self) -> Option<f64> {
        self.oscillation_scale
    }

    pub fn l1_bound(&self) -> Option<f64> {
        self.l1_bound
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    /// Metadata of a pointwise combination of `self` and `other`.
    fn merged_meta<U>(&self, other: &Func<U>) -> (Option<f64>, Vec<f64>) {
        let scale = match (self.oscillation_scale, other.oscillation_scale) {
            (Some(x), Some(y)) => Some(x.min(y)),
            (x, y) => x.or(y),
        };
        let mut bps = self.breakpoints.clone();
        bps.extend_from_slice(&other.breakpoints);
        (scale, bps)
    }

    /// Pointwise combination `t -> op(self(t), other(t))` with merged metadata.
    pub fn zip_with<U: 'static, V: 'static>(
        &self,
        other: &Func<U>,
        dim: usize,
        op: impl Fn(T, U) -> V + Send + Sync + 'static,
    ) -> Func<V> {
        let (scale, bps) = self.merged_meta(other);
        let (f, g) = (Arc::clone(&self.eval), Arc::clone(&other.eval));
        let mut out = Func::new(dim, move |t| op(f(t), g(t))).with_breakpoints(bps);
        out.oscillation_scale = scale;
        out
    }

    pub fn map<V: 'static>(&self, dim: usize, op: impl Fn(T) -> V + Send + Sync + 'static) -> Func<V> {
        let f = Arc::clone(&self.eval);
        let mut out = Func::new(dim, move |t| op(f(t))).with_breakpoints(self.breakpoints.clone());
        out.oscillation_scale = self.oscillation_scale;
        out
    }
}

impl CoeffFn {
    pub fn constant(m: CMat) -> Self {
        let dim = m.dim();
        Func::new(dim, move |_| m.clone())
    }

    pub fn zero(dim: usize) -> Self {
        Self::constant(CMat::zeros(dim))
    }

    pub fn sub(&self, other: &CoeffFn) -> CoeffFn {
        assert_eq!(self.dim, other.dim, "coefficient dimension mismatch");
        self.zip_with(other, self.dim, |x, y| &x - &y)
    }

    pub fn add(&self, other: &CoeffFn) -> CoeffFn {
        assert_eq!(self.dim, other.dim, "coefficient dimension mismatch");
        self.zip_with(other, self.dim, |x, y| &x + &y)
    }

    pub fn matmul(&self, other: &CoeffFn) -> CoeffFn {
        assert_eq!(self.dim, other.dim, "coefficient dimension mismatch");
        self.zip_with(other, self.dim, |x, y| &x * &y)
    }
}

impl VecFn {
    pub fn constant(v: CVec) -> Self {
        let dim = v.dim();
        Func::new(dim, move |_| v.clone())
    }

    pub fn zero(dim: usize) -> Self {
        Self::constant(CVec::zeros(dim))
    }

    pub fn sub(&self, other: &VecFn) -> VecFn {
        assert_eq!(self.dim, other.dim, "coefficient dimension mismatch");
        self.zip_with(other, self.dim, |x, y| &x - &y)
    }
}

/// Integrator settings derived from a tolerance and a coefficient's metadata.
#[derive(Clone, Copy, Debug)]
pub struct StepPolicy {
    pub tol: f64,
    pub h_max: f64,
    pub min_step: f64,
    pub max_steps: usize,
}

impl StepPolicy {
    pub fn new(interval: Interval, tol: f64, oscillation_scale: Option<f64>) -> Result<Self> {
        if !(1e-12..=1e-2).contains(&tol) {
            return Err(Error::InvalidArgument(format!(
                "tolerance {tol:e} outside [1e-12, 1e-2]"
            )));
        }
        let mut h_max = interval.length() / 16.0;
        if let Some(s) = oscillation_scale {
            h_max = h_max.min(s / 20.0);
        }
        Ok(Self {
            tol,
            h_max,
            min_step: 1e-14 * interval.length(),
            max_steps: 50_000_000,
        })
    }
}

type Rhs = dyn Fn(f64, &[C64], &mut [C64]) + Send + Sync;

/// Accepted nodes of an adaptive Dormand-Prince run with dense re-stepping.
pub struct Trajectory {
    interval: Interval,
    rhs: Arc<Rhs>,
    breakpoints: Vec<f64>,
    nodes: Vec<f64>,
    states: Vec<Vec<C64>>,
    rejected: usize,
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

struct StepOut {
    y: Vec<C64>,
    err: Option<Vec<C64>>,
}

/// One Dormand-Prince step. Stage times are pulled inside `(t, t + h)` at
/// breakpoint ends so a jump is sampled from the correct side.
fn dp_step(rhs: &Rhs, t: f64, y: &[C64], h: f64, nudge_lo: bool, nudge_hi: bool, with_err: bool) -> StepOut {
    let n = y.len();
    let delta = (1e-9 * h).max(8.0 * f64::EPSILON * t.abs().max(1.0));
    let lo = if nudge_lo { t + delta } else { f64::NEG_INFINITY };
    let hi = if nudge_hi { t + h - delta } else { f64::INFINITY };
    let at = |c: f64| (t + c * h).clamp(lo, hi.max(lo));

    let mut k = vec![vec![C64::new(0.0, 0.0); n]; 7];
    let mut tmp = vec![C64::new(0.0, 0.0); n];
    let combine = |tmp: &mut [C64], k: &[Vec<C64>], coeffs: &[f64]| {
        for i in 0..n {
            let mut s = y[i];
            for (kj, &c) in k.iter().zip(coeffs) {
                if c != 0.0 {
                    s += kj[i] * (h * c);
                }
            }
            tmp[i] = s;
        }
    };

    rhs(at(0.0), y, &mut k[0]);
    combine(&mut tmp, &k[..1], &[A21]);
    rhs(at(C2), &tmp, &mut k[1]);
    combine(&mut tmp, &k[..2], &[A31, A32]);
    rhs(at(C3), &tmp, &mut k[2]);
    combine(&mut tmp, &k[..3], &[A41, A42, A43]);
    rhs(at(C4), &tmp, &mut k[3]);
    combine(&mut tmp, &k[..4], &[A51, A52, A53, A54]);
    rhs(at(C5), &tmp, &mut k[4]);
    combine(&mut tmp, &k[..5], &[A61, A62, A63, A64, A65]);
    rhs(at(1.0), &tmp, &mut k[5]);
    let mut y5 = vec![C64::new(0.0, 0.0); n];
    combine(&mut y5, &k[..6], &[B1, 0.0, B3, B4, B5, B6]);
    if !with_err {
        return StepOut { y: y5, err: None };
    }
    let (k_head, k_tail) = k.split_at_mut(6);
    rhs(at(1.0), &y5, &mut k_tail[0]);
    let e = [E1, 0.0, E3, E4, E5, E6, E7];
    let err = (0..n)
        .map(|i| {
            let mut s = k_tail[0][i] * E7;
            for (j, kj) in k_head.iter().enumerate() {
                if e[j] != 0.0 {
                    s += kj[i] * e[j];
                }
            }
            s * h
        })
        .collect();
    StepOut { y: y5, err: Some(err) }
}

impl Trajectory {
    /// Integrates `y' = rhs(t, y)` from `y(a) = y0` across the interval.
    pub fn integrate(
        interval: Interval,
        y0: Vec<C64>,
        rhs: Arc<Rhs>,
        breakpoints: &[f64],
        policy: StepPolicy,
    ) -> Result<Self> {
        let (a, b) = (interval.a, interval.b);
        let mut bps: Vec<f64> = breakpoints.iter().copied().filter(|&t| t > a && t < b).collect();
        bps.sort_by(f64::total_cmp);
        bps.dedup();
        let mut stops = bps.clone();
        stops.push(b);

        let tol = policy.tol;
        let mut t = a;
        let mut y = y0;
        let mut nodes = vec![a];
        let mut states = vec![y.clone()];
        let mut h = policy.h_max.min(interval.length() / 100.0);
        let mut err_old: f64 = 1e-4;
        let mut stop_idx = 0;
        let mut at_breakpoint = false;
        let mut rejected = 0;
        const BETA: f64 = 0.04;
        const EXPO: f64 = 0.2 - BETA * 0.75;
        const SAFE: f64 = 0.9;

        while t < b {
            if nodes.len() + rejected > policy.max_steps {
                return Err(Error::StepUnderflow { t, step: h });
            }
            let stop = stops[stop_idx];
            let mut step = h.min(policy.h_max);
            let remaining = stop - t;
            if remaining > step && remaining < 1.01 * step {
                // avoid a sliver step before the stop
                step = 0.5 * remaining;
            }
            let lands = step >= remaining;
            if lands {
                step = stop - t;
            } else if step < policy.min_step {
                return Err(Error::StepUnderflow { t, step });
            }
            let nudge_hi = lands && stop < b;
            let out = dp_step(rhs.as_ref(), t, &y, step, at_breakpoint, nudge_hi, true);
            let e = out.err.expect("error estimate requested");
            let mut acc = 0.0;
            for i in 0..y.len() {
                let sk = tol + tol * y[i].norm().max(out.y[i].norm());
                let r = e[i].norm() / sk;
                acc += r * r;
            }
            let err = (acc / y.len() as f64).sqrt();
            if !err.is_finite() || out.y.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
                h = step * 0.1;
                rejected += 1;
                if h < policy.min_step {
                    return Err(Error::StepUnderflow { t, step: h });
                }
                continue;
            }
            let fac11 = err.powf(EXPO);
            if err <= 1.0 {
                let fac = (fac11 / err_old.powf(BETA) / SAFE).clamp(0.2, 10.0);
                err_old = err.max(1e-4);
                t = if lands { stop } else { t + step };
                at_breakpoint = lands && stop < b;
                if lands {
                    stop_idx += 1;
                }
                y = out.y;
                nodes.push(t);
                states.push(y.clone());
                h = step / fac;
            } else {
                rejected += 1;
                h = step / (fac11 / SAFE).min(5.0);
            }
        }
        Ok(Self {
            interval,
            rhs,
            breakpoints: bps,
            nodes,
            states,
            rejected,
        })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn states(&self) -> &[Vec<C64>] {
        &self.states
    }

    pub fn rejected_steps(&self) -> usize {
        self.rejected
    }

    pub fn interval(&self) -> Interval {
        self.interval
    }

    /// Index of the last node `<= t` (t clamped into the interval).
    fn locate(&self, t: f64) -> usize {
        match self.nodes.binary_search_by(|x| x.total_cmp(&t)) {
            Ok(i) => i,
            Err(0) => 0,
            Err(i) => i - 1,
        }
    }

    /// State at `t`, clamped into `[a, b]`.
    pub fn eval(&self, t: f64) -> Vec<C64> {
        let t = t.clamp(self.interval.a, self.interval.b);
        let i = self.locate(t);
        let ti = self.nodes[i];
        if t == ti {
            return self.states[i].clone();
        }
        let nudge_lo = self.breakpoints.binary_search_by(|x| x.total_cmp(&ti)).is_ok();
        let next_is_bp = self
            .nodes
            .get(i + 1)
            .is_some_and(|tn| *tn == t && self.breakpoints.binary_search_by(|x| x.total_cmp(tn)).is_ok());
        dp_step(self.rhs.as_ref(), ti, &self.states[i], t - ti, nudge_lo, next_is_bp, false).y
    }
}

struct MatrizantInner {
    dim: usize,
    tol: f64,
    oscillation_scale: Option<f64>,
    breakpoints: Vec<f64>,
    trajectory: Trajectory,
    node_inverses: Vec<CMat>,
}

/// Fundamental matrix `Y' = A(t) Y`, `Y(a) = I`, sampled on adaptive nodes.
#[derive(Clone)]
pub struct Matrizant {
    inner: Arc<MatrizantInner>,
}

impl std::fmt::Debug for Matrizant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Matrizant")
            .field("dim", &self.inner.dim)
            .field("nodes", &self.inner.trajectory.nodes.len())
            .field("tol", &self.inner.tol)
            .finish()
    }
}

/// Integrates the matrizant of `a` on `interval` to local tolerance `tol`.
pub fn matrizant(a: &CoeffFn, interval: Interval, tol: f64) -> Result<Matrizant> {
    let m = a.dim();
    let policy = StepPolicy::new(interval, tol, a.oscillation_scale())?;
    let coeff = a.clone();
    let rhs: Arc<Rhs> = Arc::new(move |t, y, dy| {
        let am = coeff.eval(t);
        let am = am.as_slice();
        for i in 0..m {
            for j in 0..m {
                let mut s = C64::new(0.0, 0.0);
                for k in 0..m {
                    s += am[i * m + k] * y[k * m + j];
                }
                dy[i * m + j] = s;
            }
        }
    });
    let y0 = CMat::identity(m).as_slice().to_vec();
    let trajectory = Trajectory::integrate(interval, y0, rhs, a.breakpoints(), policy)?;
    let node_inverses = trajectory
        .states
        .iter()
        .map(|s| CMat::from_row_major(m, s.clone()).and_then(|y| y.inverse()))
        .collect::<Result<Vec<_>>>()?;
    Ok(Matrizant {
        inner: Arc::new(MatrizantInner {
            dim: m,
            tol,
            oscillation_scale: a.oscillation_scale(),
            breakpoints: a.breakpoints().to_vec(),
            trajectory,
            node_inverses,
        }),
    })
}

impl Matrizant {
    pub fn dim(&self) -> usize {
        self.inner.dim
    }

    pub fn interval(&self) -> Interval {
        self.inner.trajectory.interval
    }

    pub fn nodes(&self) -> &[f64] {
        self.inner.trajectory.nodes()
    }

    /// Oscillation scale of the generating coefficient.
    pub fn oscillation_scale(&self) -> Option<f64> {
        self.inner.oscillation_scale
    }

    /// Breakpoints of the generating coefficient.
    pub fn breakpoints(&self) -> &[f64] {
        &self.inner.breakpoints
    }

    /// Tolerance the matrizant was integrated to.
    pub fn achieved_tol(&self) -> f64 {
        self.inner.tol
    }

    pub fn node_value(&self, i: usize) -> CMat {
        CMat::from_row_major(self.inner.dim, self.inner.trajectory.states[i].clone())
            .expect("stored state has m*m entries")
    }

    pub fn eval(&self, t: f64) -> CMat {
        CMat::from_row_major(self.inner.dim, self.inner.trajectory.eval(t)).expect("state has m*m entries")
    }

    /// `Y(t)^{-1}`; exact node inverses are cached.
    pub fn inverse_at(&self, t: f64) -> Result<CMat> {
        let nodes = self.nodes();
        if let Ok(i) = nodes.binary_search_by(|x| x.total_cmp(&t)) {
            return Ok(self.inner.node_inverses[i].clone());
        }
        self.eval(t).inverse()
    }

    /// Largest relative Liouville defect `|det Y - exp(int tr A)| / |exp(int tr A)|`
    /// over the nodes.
    pub fn liouville_defect(&self, a: &CoeffFn) -> f64 {
        let nodes = self.nodes();
        let mut integral = C64::new(0.0, 0.0);
        let mut worst: f64 = 0.0;
        let opts = QuadOptions::with_tol(1e-14, 1e-13);
        for (i, &t) in nodes.iter().enumerate() {
            if i > 0 {
                let q = integrate(
                    |s| {
                        let tr = a.eval(s).trace();
                        CVec::from_vec(vec![tr])
                    },
                    nodes[i - 1],
                    t,
                    a.breakpoints(),
                    opts,
                );
                integral += q.value[0];
            }
            let expected = integral.exp();
            let det = self.node_value(i).det();
            worst = worst.max((det - expected).norm() / expected.norm());
        }
        worst
    }
}

/// Evaluator of `t -> Y(t)^{-1}`.
#[derive(Clone, Debug)]
pub struct InverseMatrizant {
    y: Matrizant,
}

impl InverseMatrizant {
    pub fn eval(&self, t: f64) -> Result<CMat> {
        self.y.inverse_at(t)
    }
}

pub fn inverse_matrizant(y: &Matrizant) -> InverseMatrizant {
    InverseMatrizant { y: y.clone() }
}

/// Solution of `x' = A x + f`, `x(a) = 0`.
pub fn cauchy_solution(a: &CoeffFn, f: &VecFn, interval: Interval, tol: f64) -> Result<VecFn> {
    let m = a.dim();
    if f.dim() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            found: f.dim(),
        });
    }
    let scale = match (a.oscillation_scale(), f.oscillation_scale()) {
        (Some(x), Some(y)) => Some(x.min(y)),
        (x, y) => x.or(y),
    };
    let policy = StepPolicy::new(interval, tol, scale)?;
    let (coeff, forcing) = (a.clone(), f.clone());
    let rhs: Arc<Rhs> = Arc::new(move |t, y, dy| {
        let am = coeff.eval(t);
        let fv = forcing.eval(t);
        let am = am.as_slice();
        for i in 0..m {
            let mut s = fv[i];
            for k in 0..m {
                s += am[i * m + k] * y[k];
            }
            dy[i] = s;
        }
    });
    let mut bps = a.breakpoints().to_vec();
    bps.extend_from_slice(f.breakpoints());
    let traj = Arc::new(Trajectory::integrate(
        interval,
        vec![C64::new(0.0, 0.0); m],
        rhs,
        &bps,
        policy,
    )?);
    let mut x = Func::new(m, move |t| CVec::from_vec(traj.eval(t))).with_breakpoints(bps);
    if let Some(s) = scale {
        x = x.with_oscillation_scale(s);
    }
    Ok(x)
}

fn default_panel(interval: Interval, scale: Option<f64>) -> f64 {
    let base = interval.length() / 64.0;
    scale.map_or(base, |s| base.min(s / 4.0))
}

/// `R^(t) = int_a^t R(s) ds`, tabulated on panels and completed by one
/// quadrature inside the containing panel.
pub fn antiderivative<T>(r: &Func<T>, interval: Interval) -> Func<T>
where
    T: QuadValue + Send + Sync + 'static,
{
    let edges = panel_edges(
        interval.a,
        interval.b,
        r.breakpoints(),
        Some(default_panel(interval, r.oscillation_scale())),
    );
    let opts = QuadOptions::with_tol(1e-15, 1e-14);
    let mut cumulative = Vec::with_capacity(edges.len());
    let mut acc = r.eval(interval.a).zero_like();
    cumulative.push(acc.clone());
    for w in edges.windows(2) {
        let q = integrate(|s| r.eval(s), w[0], w[1], &[], opts);
        acc.add_scaled(1.0, &q.value);
        cumulative.push(acc.clone());
    }
    let table = Arc::new((edges, cumulative));
    let coeff = r.clone();
    let mut out = Func::new(r.dim(), move |t: f64| {
        let (edges, cumulative) = table.as_ref();
        let t = t.clamp(edges[0], *edges.last().expect("non-empty edges"));
        let k = match edges.binary_search_by(|x| x.total_cmp(&t)) {
            Ok(i) => return cumulative[i].clone(),
            Err(i) => i - 1,
        };
        let q = integrate(|s| coeff.eval(s), edges[k], t, &[], opts);
        let mut v = cumulative[k].clone();
        v.add_scaled(1.0, &q.value);
        v
    })
    .with_breakpoints(r.breakpoints().to_vec());
    if let Some(s) = r.oscillation_scale() {
        out = out.with_oscillation_scale(s);
    }
    out
}

/// `||F||_1 = int_a^b |F(s)| ds` to relative accuracy well inside 1e-6.
pub fn l1_norm<T: AbsNorm + 'static>(f: &Func<T>, interval: Interval) -> f64 {
    let opts = QuadOptions::with_tol(1e-13, 1e-8)
        .max_panel(Some(default_panel(interval, f.oscillation_scale())));
    integrate(|s| f.eval(s).abs_norm(), interval.a, interval.b, f.breakpoints(), opts).value
}

/// Grid maximum of `|F|` over `grid_size` equispaced points, refined by a
/// golden-section search on the two cells around the grid argmax.
pub fn sup_norm<T: AbsNorm>(f: impl Fn(f64) -> T, interval: Interval, grid_size: usize) -> f64 {
    assert!(grid_size >= 2, "sup_norm grid needs at least two points");
    let grid = interval.grid(grid_size);
    let (mut best_i, mut best) = (0, f64::NEG_INFINITY);
    for (i, &t) in grid.iter().enumerate() {
        let v = f(t).abs_norm();
        if v > best {
            best = v;
            best_i = i;
        }
    }
    let mut lo = grid[best_i.saturating_sub(1)];
    let mut hi = grid[(best_i + 1).min(grid_size - 1)];
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let mut f1 = f(x1).abs_norm();
    let mut f2 = f(x2).abs_norm();
    for _ in 0..40 {
        if f1 >= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = f(x1).abs_norm();
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = f(x2).abs_norm();
        }
    }
    best.max(f1).max(f2)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar(z: C64) -> CMat {
        CMat::diag(&[z])
    }

    #[test]
    fn zero_coefficient_gives_identity() {
        let y = matrizant(&CoeffFn::zero(3), Interval::unit(), 1e-10).unwrap();
        for t in [0.0, 0.3, 0.77, 1.0] {
            assert_eq!(y.eval(t), CMat::identity(3));
        }
    }

    #[test]
    fn scalar_exponential() {
        let lambda = C64::new(-0.7, 2.0);
        let a = CoeffFn::constant(scalar(lambda));
        let y = matrizant(&a, Interval::unit(), 1e-10).unwrap();
        for i in 0..=50 {
            let t = i as f64 / 50.0 + 0.003 * (i % 3) as f64;
            let t = t.min(1.0);
            let got = y.eval(t)[(0, 0)];
            assert!((got - (lambda * t).exp()).norm() < 1e-9, "t={t}");
            let inv = y.inverse_at(t).unwrap()[(0, 0)];
            assert!((inv - (-lambda * t).exp()).norm() < 1e-9);
        }
    }

    #[test]
    fn breakpoints_are_landed_exactly() {
        let a = Func::new(1, |t: f64| scalar(C64::new(if t < 0.4 { 1.0 } else { -2.0 }, 0.0)))
            .with_breakpoints(vec![0.4]);
        let y = matrizant(&a, Interval::unit(), 1e-10).unwrap();
        assert!(y.nodes().contains(&0.4));
        let exact = |t: f64| if t <= 0.4 { t.exp() } else { (0.4f64).exp() * (-2.0 * (t - 0.4)).exp() };
        for t in [0.1, 0.4, 0.41, 0.9, 1.0] {
            assert!((y.eval(t)[(0, 0)].re - exact(t)).abs() < 1e-9, "t={t}");
        }
    }

    #[test]
    fn tolerance_outside_range_is_rejected() {
        assert!(matrizant(&CoeffFn::zero(1), Interval::unit(), 1e-1).is_err());
        assert!(matrizant(&CoeffFn::zero(1), Interval::unit(), 1e-13).is_err());
        assert!(Interval::new(1.0, 1.0).is_err());
    }

    #[test]
    fn oscillation_scale_caps_steps() {
        let a = CoeffFn::zero(1).with_oscillation_scale(1e-2);
        let y = matrizant(&a, Interval::unit(), 1e-8).unwrap();
        assert!(y.nodes().windows(2).all(|w| w[1] - w[0] <= 1e-2 / 20.0 * (1.0 + 1e-12)));
    }

    #[test]
    fn cauchy_examples() {
        let i = Interval::unit();
        let x = cauchy_solution(&CoeffFn::zero(1), &VecFn::zero(1), i, 1e-10).unwrap();
        assert_eq!(x.eval(0.5).abs_norm(), 0.0);
        let one = VecFn::constant(CVec::from_real(&[1.0]));
        let x = cauchy_solution(&CoeffFn::zero(1), &one, i, 1e-10).unwrap();
        assert!((x.eval(0.37)[0].re - 0.37).abs() < 1e-12);
        assert_eq!(x.eval(0.0)[0], C64::new(0.0, 0.0));
        let a = CoeffFn::constant(CMat::identity(1));
        let x = cauchy_solution(&a, &one, i, 1e-10).unwrap();
        for t in i.grid(41) {
            assert!((x.eval(t)[0].re - (t.exp() - 1.0)).abs() < 1e-9);
        }
    }

    #[test]
    fn antiderivative_examples() {
        let i = Interval::unit();
        assert_eq!(antiderivative(&CoeffFn::zero(2), i).eval(0.6).abs_norm(), 0.0);
        let r = antiderivative(&CoeffFn::constant(CMat::identity(1)), i);
        assert!((r.eval(0.3)[(0, 0)].re - 0.3).abs() < 1e-14);
        assert_eq!(r.eval(0.0).abs_norm(), 0.0);
        for eps in [1e-1, 1e-2] {
            let c = Func::new(1, move |t: f64| scalar(C64::new((t / eps).cos() / eps.sqrt(), 0.0)))
                .with_oscillation_scale(eps);
            let rv = antiderivative(&c, i);
            for t in i.grid(97) {
                let exact = eps.sqrt() * (t / eps).sin();
                assert!((rv.eval(t)[(0, 0)].re - exact).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn l1_examples() {
        let i = Interval::unit();
        assert_eq!(l1_norm(&CoeffFn::zero(2), i), 0.0);
        let c = C64::new(3.0, -4.0);
        assert!((l1_norm(&CoeffFn::constant(scalar(c)), i) - 5.0).abs() < 1e-12);
    }

    #[test]
    fn sup_examples() {
        let i = Interval::unit();
        assert_eq!(sup_norm(|_| 0.0, i, 11), 0.0);
        assert_eq!(sup_norm(|t| t, i, 101), 1.0);
        assert!((sup_norm(|t: f64| (50.0 * t).sin(), i, 2001) - 1.0).abs() < 1e-3);
        // a narrow peak between grid points is recovered by the refinement
        let peak = |t: f64| 1.0 / (1.0 + ((t - 0.5037) / 1e-3).powi(2));
        assert!((sup_norm(peak, i, 101) - 1.0).abs() < 1e-6);
    }
}
