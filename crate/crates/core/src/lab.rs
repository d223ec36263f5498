//! Parameter sweeps over problem families `eps -> (A, f, U, c)` and the
//! diagnostics attached to continuity in `eps`: class-M evidence (`Z -> I`),
//! the Levin integral conditions, the Kiguradze condition battery, and
//! convergence of solutions and Green matrices to the `eps = 0` problem.

use std::sync::Arc;

use rayon::prelude::*;

use crate::boundary::BoundaryMeasure;
use crate::error::{Error, Result};
use crate::green::{green_matrix, solve_bvp, wellposedness, BVProblem, BvpSolution, GreenMatrix};
use crate::linalg::{AbsNorm, CMat, CVec};
use crate::ode::{antiderivative, l1_norm, matrizant, sup_norm, CoeffFn, Func, Interval, VecFn};
use crate::quadrature::{integrate, QuadOptions};
use crate::report::{ConvergenceReport, ReportRow, ScenarioEcho};

pub type FamilyFn = dyn Fn(f64) -> Result<BVProblem> + Send + Sync;

/// Numerical settings of a sweep.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweepSettings {
    /// Integrator tolerance for every matrizant and Cauchy solve.
    pub tol: f64,
    /// Minimum sup-norm grid; raised to 8 points per oscillation scale.
    pub sup_grid: usize,
    /// Cells per side of the Green-matrix comparison grid.
    pub green_grid: usize,
    /// Worker threads for sweep rows (0 = rayon default).
    pub jobs: usize,
}

impl Default for SweepSettings {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            sup_grid: 2001,
            green_grid: 201,
            jobs: 0,
        }
    }
}

impl SweepSettings {
    /// Grid size for a sup norm of a function with the given feature scale.
    pub fn sup_grid_for(&self, interval: Interval, scale: Option<f64>) -> usize {
        let resolved = scale.map_or(0, |s| (8.0 * interval.length() / s).ceil() as usize + 1);
        self.sup_grid.max(resolved).max(2)
    }
}

/// Half-decade sweep from 1e-1 down to 1e-4.
pub fn default_epsilons() -> Vec<f64> {
    vec![1e-1, 3.16e-2, 1e-2, 3.16e-3, 1e-3, 3.16e-4, 1e-4]
}

/// A parameterized family of boundary value problems with its `eps = 0` limit.
#[derive(Clone)]
pub struct FamilyScenario {
    pub name: String,
    pub interval: Interval,
    pub dim: usize,
    pub epsilons: Vec<f64>,
    pub baseline: BVProblem,
    family: Arc<FamilyFn>,
    pub settings: SweepSettings,
}

impl std::fmt::Debug for FamilyScenario {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FamilyScenario")
            .field("name", &self.name)
            .field("interval", &self.interval)
            .field("dim", &self.dim)
            .field("epsilons", &self.epsilons)
            .field("settings", &self.settings)
            .finish_non_exhaustive()
    }
}

pub fn validate_epsilons(eps: &[f64]) -> Result<()> {
    if eps.is_empty() {
        return Err(Error::config("epsilons", "at least one value required"));
    }
    for (i, &e) in eps.iter().enumerate() {
        if !(e.is_finite() && e > 0.0) {
            return Err(Error::config(format!("epsilons[{i}]"), "must be positive and finite"));
        }
        if i > 0 && !(e < eps[i - 1]) {
            return Err(Error::config(format!("epsilons[{i}]"), "must be strictly decreasing"));
        }
    }
    Ok(())
}

impl FamilyScenario {
    /// Builds a scenario without checking well-posedness of the baseline.
    pub fn unchecked(
        name: impl Into<String>,
        epsilons: Vec<f64>,
        family: Arc<FamilyFn>,
        settings: SweepSettings,
    ) -> Result<Self> {
        validate_epsilons(&epsilons)?;
        let baseline = family(0.0)?;
        Ok(Self {
            name: name.into(),
            interval: baseline.interval,
            dim: baseline.dim(),
            epsilons,
            baseline,
            family,
            settings,
        })
    }

    /// Builds a scenario and verifies the limit problem is well-posed.
    pub fn new(
        name: impl Into<String>,
        epsilons: Vec<f64>,
        family: Arc<FamilyFn>,
        settings: SweepSettings,
    ) -> Result<Self> {
        let s = Self::unchecked(name, epsilons, family, settings)?;
        let w = wellposedness(&s.baseline.a, &s.baseline.u, s.interval, settings.tol)?;
        if !w.is_wellposed() {
            return Err(Error::NonUnique {
                det_abs: w.det.norm(),
                threshold: w.threshold,
            });
        }
        Ok(s)
    }

    /// Problem at `eps`; `eps = 0` returns the baseline.
    pub fn problem(&self, eps: f64) -> Result<BVProblem> {
        if eps == 0.0 {
            return Ok(self.baseline.clone());
        }
        let p = (self.family)(eps)?;
        if p.interval != self.interval || p.dim() != self.dim {
            return Err(Error::InvalidArgument(format!(
                "family member at eps = {eps} changes the interval or dimension"
            )));
        }
        Ok(p)
    }

    /// `R(t; eps) = A(t; eps) - A(t; 0)`.
    pub fn perturbation(&self, eps: f64) -> Result<CoeffFn> {
        Ok(self.problem(eps)?.a.sub(&self.baseline.a))
    }

    fn sup<T: AbsNorm + 'static>(&self, f: &Func<T>) -> f64 {
        let n = self.settings.sup_grid_for(self.interval, f.oscillation_scale());
        sup_norm(|t| f.eval(t), self.interval, n)
    }
}

/// `sup_t |Z(t; eps) - I|` where `Z' = R Z`, `Z(a) = I`.
pub fn class_m_value(scenario: &FamilyScenario, eps: f64, tol: f64) -> Result<f64> {
    let r = scenario.perturbation(eps)?;
    let z = matrizant(&r, scenario.interval, tol)?;
    let id = CMat::identity(scenario.dim);
    let n = scenario.settings.sup_grid_for(scenario.interval, r.oscillation_scale());
    Ok(sup_norm(|t| &z.eval(t) - &id, scenario.interval, n))
}

pub fn class_m_diagnostic(scenario: &FamilyScenario, tol: f64) -> Result<Vec<f64>> {
    scenario
        .epsilons
        .iter()
        .map(|&e| class_m_value(scenario, e, tol))
        .collect()
}

/// The four Levin quantities for `R(.; eps)`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Levin {
    /// `||R||_1`
    pub alpha: f64,
    /// `||R^ R||_1`
    pub beta: f64,
    /// `||R R^||_1`
    pub gamma: f64,
    /// `||R^ R - R R^||_1`
    pub delta: f64,
}

pub fn levin_for(r: &CoeffFn, interval: Interval) -> Levin {
    let rv = antiderivative(r, interval);
    let alpha = l1_norm(r, interval);
    // one pass over [a, b] for the three product norms
    let cap = r
        .oscillation_scale()
        .map_or(interval.length() / 64.0, |s| (interval.length() / 64.0).min(s / 4.0));
    let opts = QuadOptions::with_tol(1e-13, 1e-8).max_panel(Some(cap));
    let q = integrate(
        |t| {
            let (rt, rvt) = (r.eval(t), rv.eval(t));
            let left = &rvt * &rt;
            let right = &rt * &rvt;
            let comm = &left - &right;
            CVec::from_real(&[left.abs_norm(), right.abs_norm(), comm.abs_norm()])
        },
        interval.a,
        interval.b,
        r.breakpoints(),
        opts,
    );
    Levin {
        alpha,
        beta: q.value[0].re,
        gamma: q.value[1].re,
        delta: q.value[2].re,
    }
}

pub fn levin_conditions(scenario: &FamilyScenario, eps: f64) -> Result<Levin> {
    Ok(levin_for(&scenario.perturbation(eps)?, scenario.interval))
}

/// Fixed probe basis: `e_j * {1, t, t^2, sin(3t)}` for every coordinate `j`.
pub fn probe_basis(dim: usize) -> Vec<VecFn> {
    let shapes: [fn(f64) -> f64; 4] = [|_| 1.0, |t| t, |t| t * t, |t| (3.0 * t).sin()];
    let mut probes = Vec::with_capacity(4 * dim);
    for j in 0..dim {
        for shape in shapes {
            probes.push(Func::new(dim, move |t| {
                let mut v = CVec::zeros(dim);
                v[j] = shape(t).into();
                v
            }));
        }
    }
    probes
}

/// Quantities of the Kiguradze-type sufficient conditions.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Kiguradze {
    /// 1) `||A(eps)||_1`
    pub a_l1: f64,
    /// 2) `||f(eps)||_1`
    pub f_l1: f64,
    /// 3) `||U_eps||`
    pub u_norm: f64,
    /// 4') `sup |R^(t; eps)|`
    pub cond4p: f64,
    /// 5') `sup |f^(t; eps) - f^(t; 0)|`
    pub cond5p: f64,
    /// 6) `|c_eps - c_0|`
    pub c_diff: f64,
    /// `||U_eps - U_0||`
    pub u_variation: f64,
    /// 7) `max_probe |U_eps y - U_0 y|`
    pub strong_probe: f64,
}

pub fn kiguradze_battery(scenario: &FamilyScenario, eps: f64) -> Result<Kiguradze> {
    let p = scenario.problem(eps)?;
    let base = &scenario.baseline;
    let i = scenario.interval;
    let r = p.a.sub(&base.a);
    let df = p.f.sub(&base.f);
    let rv = antiderivative(&r, i);
    let dfv = antiderivative(&df, i);
    let probes = probe_basis(scenario.dim);
    Ok(Kiguradze {
        a_l1: l1_norm(&p.a, i),
        f_l1: l1_norm(&p.f, i),
        u_norm: p.u.operator_norm(),
        cond4p: scenario.sup(&rv),
        cond5p: scenario.sup(&dfv),
        c_diff: (&p.c - &base.c).abs_norm(),
        u_variation: p.u.variation_distance(&base.u)?,
        strong_probe: p.u.strong_convergence_probe(&base.u, &probes)?,
    })
}

fn sup_diff(scenario: &FamilyScenario, y: &BvpSolution, y0: &BvpSolution) -> f64 {
    let scale = match (y.y.oscillation_scale(), y0.y.oscillation_scale()) {
        (Some(x), Some(z)) => Some(x.min(z)),
        (x, z) => x.or(z),
    };
    let n = scenario.settings.sup_grid_for(scenario.interval, scale);
    sup_norm(|t| &y.eval(t) - &y0.eval(t), scenario.interval, n)
}

/// Per-eps `sup |y(eps) - y(0)|`; degenerate members are recorded as errors.
pub fn solution_convergence(scenario: &FamilyScenario, tol: f64) -> Result<Vec<Result<f64>>> {
    let y0 = solve_bvp(&scenario.baseline, tol)?;
    Ok(scenario
        .epsilons
        .iter()
        .map(|&e| {
            let y = solve_bvp(&scenario.problem(e)?, tol)?;
            Ok(sup_diff(scenario, &y, &y0))
        })
        .collect())
}

/// Comparison grid of cell midpoints; avoids atom coordinates in practice.
pub fn green_grid(interval: Interval, n: usize) -> Vec<f64> {
    interval.midpoints(n)
}

pub fn green_difference(g: &GreenMatrix, g0: &GreenMatrix, grid: &[f64]) -> Result<f64> {
    let a = g.tabulate(grid, grid)?;
    let b = g0.tabulate(grid, grid)?;
    Ok(a.iter()
        .zip(&b)
        .flat_map(|(ra, rb)| ra.iter().zip(rb).map(|(x, y)| (x - y).abs_norm()))
        .fold(0.0, f64::max))
}

/// Per-eps `max_grid |G(t, s; eps) - G(t, s; 0)|`.
pub fn green_convergence(scenario: &FamilyScenario, grid: usize, tol: f64) -> Result<Vec<Result<f64>>> {
    let base = &scenario.baseline;
    let g0 = green_matrix(&base.a, &base.u, scenario.interval, tol)?;
    let pts = green_grid(scenario.interval, grid);
    Ok(scenario
        .epsilons
        .iter()
        .map(|&e| {
            let p = scenario.problem(e)?;
            let g = green_matrix(&p.a, &p.u, scenario.interval, tol)?;
            green_difference(&g, &g0, &pts)
        })
        .collect())
}

/// Multipoint comparison at one parameter value.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MultipointComparison {
    pub variation: f64,
    /// `max_k nu(B_k(eps) - B_k(0))`
    pub max_weight_change: f64,
    /// `sum_k nu(B_k(eps) - B_k(0))`
    pub sum_weight_change: f64,
}

/// Compares `sum_k B_k(eps) y(t_k)` with `sum_k B_k(0) y(t_k)` for fixed distinct locations.
pub fn multipoint_equivalence(
    interval: Interval,
    locations: &[f64],
    weights_0: &[CMat],
    weights_eps: &[CMat],
) -> Result<MultipointComparison> {
    if locations.len() != weights_0.len() || locations.len() != weights_eps.len() {
        return Err(Error::InvalidArgument("locations and weights differ in length".into()));
    }
    let mut sorted = locations.to_vec();
    sorted.sort_by(f64::total_cmp);
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::InvalidArgument("multipoint locations must be distinct".into()));
    }
    let u0 = BoundaryMeasure::multipoint(interval, locations.iter().copied().zip(weights_0.iter().cloned()).collect())?;
    let ue = BoundaryMeasure::multipoint(interval, locations.iter().copied().zip(weights_eps.iter().cloned()).collect())?;
    let variation = ue.variation_distance(&u0)?;
    let changes: Vec<f64> = weights_eps
        .iter()
        .zip(weights_0)
        .map(|(e, z)| (e - z).induced_norm())
        .collect();
    Ok(MultipointComparison {
        variation,
        max_weight_change: changes.iter().copied().fold(0.0, f64::max),
        sum_weight_change: changes.iter().sum(),
    })
}

struct Baseline {
    solution: Result<BvpSolution>,
    green: Result<GreenMatrix>,
}

fn sweep_row(scenario: &FamilyScenario, eps: f64, base: &Baseline) -> ReportRow {
    let mut row = ReportRow::empty(eps);
    let mut errors = Vec::new();
    let tol = scenario.settings.tol;
    let mut note = |what: &str, e: &Error| errors.push(format!("{what}: {e}"));

    match class_m_value(scenario, eps, tol) {
        Ok(v) => row.sup_z_minus_i = Some(v),
        Err(e) => note("class_m", &e),
    }
    match levin_conditions(scenario, eps) {
        Ok(l) => {
            row.levin_alpha = Some(l.alpha);
            row.levin_beta = Some(l.beta);
            row.levin_gamma = Some(l.gamma);
            row.levin_delta = Some(l.delta);
        }
        Err(e) => note("levin", &e),
    }
    match kiguradze_battery(scenario, eps) {
        Ok(k) => {
            row.a_l1 = Some(k.a_l1);
            row.f_l1 = Some(k.f_l1);
            row.u_norm = Some(k.u_norm);
            row.cond4p = Some(k.cond4p);
            row.cond5p = Some(k.cond5p);
            row.c_diff = Some(k.c_diff);
            row.u_variation = Some(k.u_variation);
            row.strong_probe = Some(k.strong_probe);
        }
        Err(e) => note("kiguradze", &e),
    }
    let problem = match scenario.problem(eps) {
        Ok(p) => p,
        Err(e) => {
            note("problem", &e);
            row.error = Some(errors.join("; "));
            return row;
        }
    };
    match wellposedness(&problem.a, &problem.u, scenario.interval, tol) {
        Ok(w) => row.set_det(w.det),
        Err(e) => note("wellposed", &e),
    }
    match (&base.solution, solve_bvp(&problem, tol)) {
        (Ok(y0), Ok(y)) => row.sol_diff = Some(sup_diff(scenario, &y, y0)),
        (Err(e), _) => note("baseline solve", e),
        (_, Err(e)) => note("solve", &e),
    }
    let grid = green_grid(scenario.interval, scenario.settings.green_grid);
    match (&base.green, green_matrix(&problem.a, &problem.u, scenario.interval, tol)) {
        (Ok(g0), Ok(g)) => match green_difference(&g, g0, &grid) {
            Ok(d) => row.green_diff = Some(d),
            Err(e) => note("green", &e),
        },
        (Err(e), _) => note("baseline green", e),
        (_, Err(e)) => note("green", &e),
    }
    if !errors.is_empty() {
        row.error = Some(errors.join("; "));
    }
    row
}

/// Runs every diagnostic at every `eps`. Rows are independent and may run in
/// parallel; the report is ordered by decreasing `eps` regardless.
pub fn run_sweep(scenario: &FamilyScenario) -> Result<ConvergenceReport> {
    let tol = scenario.settings.tol;
    let b = &scenario.baseline;
    let base = Baseline {
        solution: solve_bvp(b, tol),
        green: green_matrix(&b.a, &b.u, scenario.interval, tol),
    };
    let compute = || -> Vec<ReportRow> {
        scenario
            .epsilons
            .par_iter()
            .map(|&e| sweep_row(scenario, e, &base))
            .collect()
    };
    let rows = if scenario.settings.jobs > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(scenario.settings.jobs)
            .build()
            .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?
            .install(compute)
    } else {
        compute()
    };
    let mut report = ConvergenceReport::new(ScenarioEcho::from_scenario(scenario), rows);
    report.sort_rows();
    Ok(report)
}
