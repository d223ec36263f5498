//! Named problem families and coefficient building blocks.
//!
//! A scenario either names a family (`example1`, `example2`,
//! `linear_perturbation`, `multipoint`, `constant`) or composes
//! `A(eps) = baseline(eps = 0) + perturbation(eps)` from the coefficient table.
//! The forcing `f` and the density of `U` come from their own small tables.
//!
//! New families are added in code: write a builder that parses its
//! parameters through [`Params`] and returns a [`FamilyFn`], then list it in
//! [`FAMILIES`] and in the match inside [`resolve_family`].

use std::sync::Arc;

use crate::boundary::BoundaryMeasure;
use crate::config::{BoundarySpec, NamedSpec, Params, ScenarioConfig};
use crate::error::{Error, Result};
use crate::green::BVProblem;
use crate::lab::FamilyFn;
use crate::linalg::{CMat, CVec, C64};
use crate::ode::{CoeffFn, Func, Interval, VecFn};

/// One registry entry as shown by `list`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RegistryEntry {
    /// `family`, `coefficient`, `vector` or `density`.
    pub kind: &'static str,
    pub name: &'static str,
    pub summary: &'static str,
    /// `(parameter, description)`
    pub params: &'static [(&'static str, &'static str)],
}

const FAMILIES: &[RegistryEntry] = &[
    RegistryEntry {
        kind: "family",
        name: "constant",
        summary: "A(eps) = a0 for every eps; boundary, f and c from the config",
        params: &[("a0", "matrix, default zero")],
    },
    RegistryEntry {
        kind: "family",
        name: "example1",
        summary: "m = 2, A = a0 + [[0, cos(t/eps)/sqrt(eps)], [sin(2t/eps)/sqrt(eps), 0]]; \
                  defaults U y = y(a), c = (1, 1), f = 0",
        params: &[("a0", "matrix, default [[0, 1], [-1, 0]]")],
    },
    RegistryEntry {
        kind: "family",
        name: "example2",
        summary: "A = 0, U_eps y = y(a + eps); defaults f = 1, c = 0; no boundary block allowed",
        params: &[],
    },
    RegistryEntry {
        kind: "family",
        name: "linear_perturbation",
        summary: "A(eps) = a0 + eps b; U_eps = U_0 + eps * value * delta_t when atom_perturbation is given",
        params: &[
            ("a0", "matrix, required"),
            ("b", "matrix, required"),
            ("atom_perturbation", "object {t: number, value: matrix}, optional"),
        ],
    },
    RegistryEntry {
        kind: "family",
        name: "multipoint",
        summary: "U_eps y = sum_k (b0_k + eps directions_k) y(t_k); default c = ones; no boundary block allowed",
        params: &[
            ("locations", "distinct numbers in [a, b], required"),
            ("b0", "list of matrices, one per location, required"),
            ("directions", "list of matrices, one per location, required"),
            ("a0", "matrix, default zero"),
        ],
    },
];

const COEFFICIENTS: &[RegistryEntry] = &[
    RegistryEntry {
        kind: "coefficient",
        name: "zero",
        summary: "0",
        params: &[],
    },
    RegistryEntry {
        kind: "coefficient",
        name: "constant",
        summary: "value, independent of eps",
        params: &[("value", "matrix, required")],
    },
    RegistryEntry {
        kind: "coefficient",
        name: "linear",
        summary: "eps * value",
        params: &[("value", "matrix, required")],
    },
    RegistryEntry {
        kind: "coefficient",
        name: "example1_r",
        summary: "[[0, cos(t/eps)/sqrt(eps)], [sin(2t/eps)/sqrt(eps), 0]], zero at eps = 0; m = 2",
        params: &[],
    },
    RegistryEntry {
        kind: "coefficient",
        name: "trig",
        summary: "amplitude * sin(omega t / eps + phase), zero at eps = 0",
        params: &[
            ("amplitude", "matrix, required"),
            ("omega", "positive number, default 1"),
            ("phase", "number, default 0"),
        ],
    },
];

const VECTORS: &[RegistryEntry] = &[
    RegistryEntry {
        kind: "vector",
        name: "zero",
        summary: "0",
        params: &[],
    },
    RegistryEntry {
        kind: "vector",
        name: "constant",
        summary: "value",
        params: &[("value", "vector, required")],
    },
    RegistryEntry {
        kind: "vector",
        name: "trig",
        summary: "amplitude * sin(omega t)",
        params: &[("amplitude", "vector, required"), ("omega", "number, default 1")],
    },
    RegistryEntry {
        kind: "vector",
        name: "perturbed",
        summary: "base + eps * direction",
        params: &[("base", "vector, required"), ("direction", "vector, required")],
    },
];

const DENSITIES: &[RegistryEntry] = &[
    RegistryEntry {
        kind: "density",
        name: "constant",
        summary: "Phi(t) = value",
        params: &[("value", "matrix, required")],
    },
    RegistryEntry {
        kind: "density",
        name: "trig",
        summary: "Phi(t) = amplitude * sin(omega t)",
        params: &[("amplitude", "matrix, required"), ("omega", "number, default 1")],
    },
];

/// Every family and building block with its parameters.
pub fn registry_list() -> Vec<RegistryEntry> {
    [FAMILIES, COEFFICIENTS, VECTORS, DENSITIES].concat()
}

fn names(table: &[RegistryEntry]) -> String {
    table.iter().map(|e| e.name).collect::<Vec<_>>().join(", ")
}

fn unknown(path: &str, name: &str, table: &[RegistryEntry]) -> Error {
    Error::config(path, format!("unknown name '{name}' (known: {})", names(table)))
}

/// Coefficient `A(t; eps)` as a function of `eps`.
type CoeffFamily = Arc<dyn Fn(f64) -> CoeffFn + Send + Sync>;
type VecFamily = Arc<dyn Fn(f64) -> VecFn + Send + Sync>;

/// Attaches an oscillation scale when it is a usable positive number.
fn with_scale<T: 'static>(f: Func<T>, scale: f64) -> Func<T> {
    if scale.is_finite() && scale > 0.0 {
        f.with_oscillation_scale(scale)
    } else {
        f
    }
}

fn trig_scalar(omega: f64, phase: f64, eps: f64) -> impl Fn(f64) -> f64 + Send + Sync + Clone {
    move |t| (omega * t / eps + phase).sin()
}

/// `R(t; eps)` of the oscillatory 2x2 family.
pub fn example1_r(eps: f64) -> CoeffFn {
    if eps == 0.0 {
        return CoeffFn::zero(2);
    }
    let k = 1.0 / eps.sqrt();
    Func::new(2, move |t| {
        let mut m = CMat::zeros(2);
        m[(0, 1)] = C64::new(k * (t / eps).cos(), 0.0);
        m[(1, 0)] = C64::new(k * (2.0 * t / eps).sin(), 0.0);
        m
    })
    .with_oscillation_scale(eps)
}

fn require_dim(path: &str, dim: usize, needed: usize) -> Result<()> {
    if dim != needed {
        return Err(Error::config(path, format!("requires dim = {needed}, config has {dim}")));
    }
    Ok(())
}

fn coefficient(spec: &NamedSpec, path: &str, dim: usize) -> Result<CoeffFamily> {
    let p = Params::new(format!("{path}.params"), &spec.params);
    Ok(match spec.name.as_str() {
        "zero" => {
            p.only(&[])?;
            Arc::new(move |_| CoeffFn::zero(dim))
        }
        "constant" => {
            p.only(&["value"])?;
            let v = p.require("value", p.matrix("value", dim)?)?;
            Arc::new(move |_| CoeffFn::constant(v.clone()))
        }
        "linear" => {
            p.only(&["value"])?;
            let v = p.require("value", p.matrix("value", dim)?)?;
            Arc::new(move |eps| CoeffFn::constant(v.scale(C64::new(eps, 0.0))))
        }
        "example1_r" => {
            p.only(&[])?;
            require_dim(&format!("{path}.name"), dim, 2)?;
            Arc::new(example1_r)
        }
        "trig" => {
            p.only(&["amplitude", "omega", "phase"])?;
            let amp = p.require("amplitude", p.matrix("amplitude", dim)?)?;
            let omega = p.number("omega")?.unwrap_or(1.0);
            if omega <= 0.0 {
                return Err(Error::config(format!("{path}.params.omega"), "must be positive"));
            }
            let phase = p.number("phase")?.unwrap_or(0.0);
            Arc::new(move |eps| {
                if eps == 0.0 {
                    return CoeffFn::zero(dim);
                }
                let s = trig_scalar(omega, phase, eps);
                let amp = amp.clone();
                with_scale(Func::new(dim, move |t| amp.scale(C64::new(s(t), 0.0))), eps / omega)
            })
        }
        other => return Err(unknown(&format!("{path}.name"), other, COEFFICIENTS)),
    })
}

fn vector(spec: &NamedSpec, path: &str, dim: usize) -> Result<VecFamily> {
    let p = Params::new(format!("{path}.params"), &spec.params);
    Ok(match spec.name.as_str() {
        "zero" => {
            p.only(&[])?;
            Arc::new(move |_| VecFn::zero(dim))
        }
        "constant" => {
            p.only(&["value"])?;
            let v = p.require("value", p.vector("value", dim)?)?;
            Arc::new(move |_| VecFn::constant(v.clone()))
        }
        "trig" => {
            p.only(&["amplitude", "omega"])?;
            let amp = p.require("amplitude", p.vector("amplitude", dim)?)?;
            let omega = p.number("omega")?.unwrap_or(1.0);
            let f = with_scale(
                Func::new(dim, move |t| amp.scale(C64::new((omega * t).sin(), 0.0))),
                1.0 / omega.abs(),
            );
            Arc::new(move |_| f.clone())
        }
        "perturbed" => {
            p.only(&["base", "direction"])?;
            let base = p.require("base", p.vector("base", dim)?)?;
            let dir = p.require("direction", p.vector("direction", dim)?)?;
            Arc::new(move |eps| {
                let mut v = base.clone();
                for (x, d) in v.as_mut_slice().iter_mut().zip(dir.as_slice()) {
                    *x += d * eps;
                }
                VecFn::constant(v)
            })
        }
        other => return Err(unknown(&format!("{path}.name"), other, VECTORS)),
    })
}

fn density(spec: &NamedSpec, path: &str, dim: usize) -> Result<CoeffFn> {
    let p = Params::new(format!("{path}.params"), &spec.params);
    match spec.name.as_str() {
        "constant" => {
            p.only(&["value"])?;
            Ok(CoeffFn::constant(p.require("value", p.matrix("value", dim)?)?))
        }
        "trig" => {
            p.only(&["amplitude", "omega"])?;
            let amp = p.require("amplitude", p.matrix("amplitude", dim)?)?;
            let omega = p.number("omega")?.unwrap_or(1.0);
            Ok(with_scale(
                Func::new(dim, move |t| amp.scale(C64::new((omega * t).sin(), 0.0))),
                1.0 / omega.abs(),
            ))
        }
        other => Err(unknown(&format!("{path}.name"), other, DENSITIES)),
    }
}

/// Decodes a `boundary` block into a measure on `interval`.
pub fn boundary_measure(spec: &BoundarySpec, interval: Interval, dim: usize) -> Result<BoundaryMeasure> {
    if spec.atoms.len() > 1000 {
        return Err(Error::config("boundary.atoms", "at most 1000 atoms"));
    }
    let atoms = spec
        .atoms
        .iter()
        .enumerate()
        .map(|(k, a)| a.to_atom(&format!("boundary.atoms[{k}]"), interval, dim))
        .collect::<Result<Vec<_>>>()?;
    let phi = spec
        .density
        .as_ref()
        .map(|d| density(d, "boundary.density", dim))
        .transpose()?;
    BoundaryMeasure::new(interval, dim, atoms, phi).map_err(|e| Error::config("boundary", e.to_string()))
}

/// Boundary operator from the config's `boundary` block, or `U y = y(a)` when absent.
fn boundary(cfg: &ScenarioConfig, interval: Interval) -> Result<BoundaryMeasure> {
    match &cfg.boundary {
        Some(spec) => boundary_measure(spec, interval, cfg.dim),
        None => Ok(BoundaryMeasure::initial(interval, cfg.dim)),
    }
}

fn forbid_boundary(cfg: &ScenarioConfig, family: &str) -> Result<()> {
    if cfg.boundary.is_some() {
        return Err(Error::config(
            "boundary",
            format!("family '{family}' defines its own boundary operator"),
        ));
    }
    Ok(())
}

fn forcing(cfg: &ScenarioConfig, default: impl FnOnce() -> CVec) -> Result<VecFamily> {
    match &cfg.f {
        Some(spec) => vector(spec, "f", cfg.dim),
        None => {
            let v = default();
            Ok(Arc::new(move |_| VecFn::constant(v.clone())))
        }
    }
}

fn rhs_value(cfg: &ScenarioConfig, default: impl FnOnce() -> CVec) -> Result<CVec> {
    cfg.c
        .as_ref()
        .map(|c| c.to_vector("c", cfg.dim))
        .transpose()
        .map(|c| c.unwrap_or_else(default))
}

fn ones(dim: usize) -> CVec {
    CVec::from_real(&vec![1.0; dim])
}

/// Assembles a family whose boundary operator does not depend on `eps`.
fn fixed_boundary_family(
    interval: Interval,
    a: CoeffFamily,
    f: VecFamily,
    u: BoundaryMeasure,
    c: CVec,
) -> Arc<FamilyFn> {
    Arc::new(move |eps| BVProblem::new(interval, a(eps), f(eps), u.clone(), c.clone()))
}

/// Resolves the family of a validated config into `eps -> BVProblem`.
///
/// Only parameters are parsed and checked here; no integration happens until
/// a problem is solved.
pub fn resolve_family(cfg: &ScenarioConfig) -> Result<Arc<FamilyFn>> {
    let interval = cfg.interval()?;
    let dim = cfg.dim;
    let fam = &cfg.family;

    let Some(name) = fam.registry.as_deref() else {
        let (Some(base), Some(pert)) = (&fam.baseline, &fam.perturbation) else {
            return Err(Error::config(
                "family",
                "give either \"registry\" or both \"baseline\" and \"perturbation\"",
            ));
        };
        let base = coefficient(base, "family.baseline", dim)?(0.0);
        let pert = coefficient(pert, "family.perturbation", dim)?;
        let a: CoeffFamily = Arc::new(move |eps| base.add(&pert(eps)));
        let f = forcing(cfg, || CVec::zeros(dim))?;
        let u = boundary(cfg, interval)?;
        let c = rhs_value(cfg, || CVec::zeros(dim))?;
        return Ok(fixed_boundary_family(interval, a, f, u, c));
    };

    let p = Params::new("family.params", &fam.params);
    match name {
        "constant" => {
            p.only(&["a0"])?;
            let a0 = p.matrix("a0", dim)?.unwrap_or_else(|| CMat::zeros(dim));
            let a: CoeffFamily = Arc::new(move |_| CoeffFn::constant(a0.clone()));
            let f = forcing(cfg, || CVec::zeros(dim))?;
            let u = boundary(cfg, interval)?;
            let c = rhs_value(cfg, || CVec::zeros(dim))?;
            Ok(fixed_boundary_family(interval, a, f, u, c))
        }
        "example1" => {
            p.only(&["a0"])?;
            require_dim("dim", dim, 2)?;
            let a0 = p
                .matrix("a0", 2)?
                .unwrap_or_else(|| CMat::from_real(&[&[0.0, 1.0], &[-1.0, 0.0]]));
            let base = CoeffFn::constant(a0);
            let a: CoeffFamily = Arc::new(move |eps| base.add(&example1_r(eps)));
            let f = forcing(cfg, || CVec::zeros(2))?;
            let u = boundary(cfg, interval)?;
            let c = rhs_value(cfg, || ones(2))?;
            Ok(fixed_boundary_family(interval, a, f, u, c))
        }
        "example2" => {
            p.only(&[])?;
            forbid_boundary(cfg, name)?;
            let f = forcing(cfg, || ones(dim))?;
            let c = rhs_value(cfg, || CVec::zeros(dim))?;
            Ok(Arc::new(move |eps| {
                let t = interval.a + eps;
                if !interval.contains(t) {
                    return Err(Error::InvalidArgument(format!(
                        "evaluation point a + eps = {t} leaves [{}, {}]",
                        interval.a, interval.b
                    )));
                }
                let u = BoundaryMeasure::point(interval, t, CMat::identity(dim))?;
                BVProblem::new(interval, CoeffFn::zero(dim), f(eps), u, c.clone())
            }))
        }
        "linear_perturbation" => {
            p.only(&["a0", "b", "atom_perturbation"])?;
            let a0 = p.require("a0", p.matrix("a0", dim)?)?;
            let b = p.require("b", p.matrix("b", dim)?)?;
            let atom = match fam.params.get("atom_perturbation") {
                None => None,
                Some(v) => {
                    let map = v.as_object().ok_or_else(|| {
                        Error::config("family.params.atom_perturbation", "expected an object {t, value}")
                    })?;
                    let q = Params::new("family.params.atom_perturbation", map);
                    q.only(&["t", "value"])?;
                    let t = q.require("t", q.number("t")?)?;
                    if !interval.contains(t) {
                        return Err(Error::config("family.params.atom_perturbation.t", "outside the interval"));
                    }
                    Some((t, q.require("value", q.matrix("value", dim)?)?))
                }
            };
            let (a0, b) = (CoeffFn::constant(a0), b);
            let f = forcing(cfg, || CVec::zeros(dim))?;
            let u0 = boundary(cfg, interval)?;
            let c = rhs_value(cfg, || CVec::zeros(dim))?;
            Ok(Arc::new(move |eps| {
                let a = a0.add(&CoeffFn::constant(b.scale(C64::new(eps, 0.0))));
                let u = match &atom {
                    Some((t, w)) if eps != 0.0 => {
                        let mut atoms: Vec<(f64, CMat)> =
                            u0.atoms().iter().map(|x| (x.location, x.weight.clone())).collect();
                        atoms.push((*t, w.scale(C64::new(eps, 0.0))));
                        BoundaryMeasure::new(interval, dim, atoms, u0.density().cloned())?
                    }
                    _ => u0.clone(),
                };
                BVProblem::new(interval, a, f(eps), u, c.clone())
            }))
        }
        "multipoint" => {
            p.only(&["locations", "b0", "directions", "a0"])?;
            forbid_boundary(cfg, name)?;
            let locations = p.require("locations", p.numbers("locations")?)?;
            if locations.is_empty() || locations.len() > 1000 {
                return Err(Error::config("family.params.locations", "expected 1 to 1000 locations"));
            }
            for (k, &t) in locations.iter().enumerate() {
                if !interval.contains(t) {
                    return Err(Error::config(format!("family.params.locations[{k}]"), "outside the interval"));
                }
                if locations[..k].contains(&t) {
                    return Err(Error::config(format!("family.params.locations[{k}]"), "duplicate location"));
                }
            }
            let b0 = p.require("b0", p.matrices("b0", dim)?)?;
            let dirs = p.require("directions", p.matrices("directions", dim)?)?;
            for (key, list) in [("b0", &b0), ("directions", &dirs)] {
                if list.len() != locations.len() {
                    return Err(Error::config(
                        format!("family.params.{key}"),
                        format!("expected {} matrices, found {}", locations.len(), list.len()),
                    ));
                }
            }
            let a0 = p.matrix("a0", dim)?.unwrap_or_else(|| CMat::zeros(dim));
            let a = CoeffFn::constant(a0);
            let f = forcing(cfg, || CVec::zeros(dim))?;
            let c = rhs_value(cfg, || ones(dim))?;
            Ok(Arc::new(move |eps| {
                let atoms = locations
                    .iter()
                    .zip(b0.iter().zip(&dirs))
                    .map(|(&t, (w, d))| {
                        let mut w = w.clone();
                        w.axpy(C64::new(eps, 0.0), d);
                        (t, w)
                    })
                    .collect();
                let u = BoundaryMeasure::new(interval, dim, atoms, None)?;
                BVProblem::new(interval, a.clone(), f(eps), u, c.clone())
            }))
        }
        other => Err(unknown("family.registry", other, FAMILIES)),
    }
}
