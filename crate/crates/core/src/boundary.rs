//! Boundary operators `U y = int_a^b [dH(t)] y(t)` represented by the
//! normalized measure `dH`: finitely many atoms `B_k` at `t_k` plus an
//! absolutely continuous part `Phi(t) dt`.
//!
//! Vector norms are the entrywise sum `|y| = sum_i |y_i|`, so the operator
//! norm on `C([a, b]; C^m)` is `sum_k nu(B_k) + int nu(Phi)` with `nu` the
//! maximum absolute column sum.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::{AbsNorm, CMat, CVec};
use crate::ode::{CoeffFn, Interval, Matrizant, VecFn};
use crate::quadrature::{integrate, panel_edges, QuadOptions, QuadValue};

/// Point mass `weight * delta(t - location)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Atom {
    pub location: f64,
    pub weight: CMat,
}

/// Canonical NBV measure: atoms at strictly increasing distinct locations
/// with nonzero weights, and an optional density.
#[derive(Clone, Debug)]
pub struct BoundaryMeasure {
    dim: usize,
    interval: Interval,
    atoms: Vec<Atom>,
    density: Option<CoeffFn>,
}

fn quad_opts() -> QuadOptions {
    QuadOptions::with_tol(1e-14, 1e-12)
}

fn panel_cap(interval: Interval, scales: &[Option<f64>]) -> f64 {
    scales
        .iter()
        .flatten()
        .fold(interval.length() / 32.0, |h, s| h.min(s / 4.0))
}

impl BoundaryMeasure {
    pub fn new(
        interval: Interval,
        dim: usize,
        atoms: Vec<(f64, CMat)>,
        density: Option<CoeffFn>,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument("boundary dimension must be positive".into()));
        }
        for (t, w) in &atoms {
            if !interval.contains(*t) {
                return Err(Error::InvalidArgument(format!(
                    "atom location {t} outside [{}, {}]",
                    interval.a, interval.b
                )));
            }
            if w.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: w.dim(),
                });
            }
            if !w.is_finite() {
                return Err(Error::InvalidArgument(format!("atom weight at {t} is not finite")));
            }
        }
        if let Some(phi) = &density {
            if phi.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: phi.dim(),
                });
            }
        }
        let mut sorted = atoms;
        sorted.sort_by(|x, y| x.0.total_cmp(&y.0));
        let mut merged: Vec<Atom> = Vec::with_capacity(sorted.len());
        for (location, weight) in sorted {
            match merged.last_mut() {
                Some(last) if last.location == location => last.weight += &weight,
                _ => merged.push(Atom { location, weight }),
            }
        }
        merged.retain(|a| !a.weight.is_zero());
        Ok(Self {
            dim,
            interval,
            atoms: merged,
            density,
        })
    }

    /// Single atom `weight * y(t)`.
    pub fn point(interval: Interval, t: f64, weight: CMat) -> Result<Self> {
        let dim = weight.dim();
        Self::new(interval, dim, vec![(t, weight)], None)
    }

    /// The initial-value operator `U y = y(a)`.
    pub fn initial(interval: Interval, dim: usize) -> Self {
        Self::point(interval, interval.a, CMat::identity(dim)).expect("a lies in [a, b]")
    }

    /// Multipoint operator `sum_k B_k y(t_k)`.
    pub fn multipoint(interval: Interval, atoms: Vec<(f64, CMat)>) -> Result<Self> {
        let dim = atoms
            .first()
            .map(|(_, w)| w.dim())
            .ok_or_else(|| Error::InvalidArgument("multipoint operator needs atoms".into()))?;
        Self::new(interval, dim, atoms, None)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn interval(&self) -> Interval {
        self.interval
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn density(&self) -> Option<&CoeffFn> {
        self.density.as_ref()
    }

    fn atom_locations(&self) -> Vec<f64> {
        self.atoms.iter().map(|a| a.location).collect()
    }

    /// `U y = sum_k B_k y(t_k) + int Phi y`.
    pub fn apply(&self, y: &VecFn) -> Result<CVec> {
        if y.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: y.dim(),
            });
        }
        let mut out = CVec::zeros(self.dim);
        for atom in &self.atoms {
            out += &atom.weight.mul_vec(&y.eval(atom.location));
        }
        if let Some(phi) = &self.density {
            let mut bps = self.atom_locations();
            bps.extend_from_slice(phi.breakpoints());
            bps.extend_from_slice(y.breakpoints());
            let cap = panel_cap(self.interval, &[phi.oscillation_scale(), y.oscillation_scale()]);
            let q = integrate(
                |t| phi.eval(t).mul_vec(&y.eval(t)),
                self.interval.a,
                self.interval.b,
                &bps,
                quad_opts().max_panel(Some(cap)),
            );
            out += &q.value;
        }
        Ok(out)
    }

    /// Column-wise application to a matrix-valued function.
    pub fn apply_columns(&self, f: &CoeffFn) -> Result<CMat> {
        if f.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: f.dim(),
            });
        }
        let mut out = CMat::zeros(self.dim);
        for atom in &self.atoms {
            out += &(&atom.weight * &f.eval(atom.location));
        }
        if let Some(phi) = &self.density {
            let mut bps = self.atom_locations();
            bps.extend_from_slice(phi.breakpoints());
            bps.extend_from_slice(f.breakpoints());
            let cap = panel_cap(self.interval, &[phi.oscillation_scale(), f.oscillation_scale()]);
            let q = integrate(
                |t| &phi.eval(t) * &f.eval(t),
                self.interval.a,
                self.interval.b,
                &bps,
                quad_opts().max_panel(Some(cap)),
            );
            out += &q.value;
        }
        Ok(out)
    }

    /// `[U Y]`, the matrix whose columns are `U` applied to the columns of `Y`.
    /// Shares its code path with [`HTransform::at_end_inclusive`].
    pub fn apply_to_matrix(&self, y: &Matrizant) -> Result<CMat> {
        Ok(self.h_transform(y)?.at_end_inclusive().clone())
    }

    /// `H_Y(t) = int_a^t [dH(s)] Y(s)`.
    pub fn h_transform(&self, y: &Matrizant) -> Result<HTransform> {
        if y.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: y.dim(),
            });
        }
        HTransform::new(self, y)
    }

    /// Total variation of `H` under `nu`: the norm of `U` as an operator
    /// `C([a, b]; C^m) -> C^m`.
    pub fn operator_norm(&self) -> f64 {
        let atoms: f64 = self.atoms.iter().map(|a| a.weight.induced_norm()).sum();
        let density = self.density.as_ref().map_or(0.0, |phi| {
            let cap = panel_cap(self.interval, &[phi.oscillation_scale()]);
            integrate(
                |t| phi.eval(t).induced_norm(),
                self.interval.a,
                self.interval.b,
                phi.breakpoints(),
                quad_opts().max_panel(Some(cap)),
            )
            .value
        });
        atoms + density
    }

    /// Signed measure `self - other`; atoms at shared locations are merged.
    pub fn difference(&self, other: &BoundaryMeasure) -> Result<BoundaryMeasure> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: other.dim,
            });
        }
        if self.interval != other.interval {
            return Err(Error::InvalidArgument("boundary measures live on different intervals".into()));
        }
        let mut atoms: Vec<(f64, CMat)> = self
            .atoms
            .iter()
            .map(|a| (a.location, a.weight.clone()))
            .collect();
        atoms.extend(other.atoms.iter().map(|a| (a.location, -a.weight.clone())));
        let density = match (&self.density, &other.density) {
            (Some(p), Some(q)) => Some(p.sub(q)),
            (Some(p), None) => Some(p.clone()),
            (None, Some(q)) => Some(q.map(q.dim(), |m| -m)),
            (None, None) => None,
        };
        BoundaryMeasure::new(self.interval, self.dim, atoms, density)
    }

    /// `||U_1 - U_2||` (total variation of the difference of the measures).
    pub fn variation_distance(&self, other: &BoundaryMeasure) -> Result<f64> {
        Ok(self.difference(other)?.operator_norm())
    }

    /// `max_p |U_1 p - U_2 p|` over a finite probe set; a necessary-condition
    /// surrogate for strong convergence.
    pub fn strong_convergence_probe(&self, other: &BoundaryMeasure, probes: &[VecFn]) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for p in probes {
            let d = &self.apply(p)? - &other.apply(p)?;
            worst = worst.max(d.abs_norm());
        }
        Ok(worst)
    }
}

/// Evaluable `H_Y(t)`, left-continuous at atoms.
#[derive(Clone)]
pub struct HTransform {
    atom_locations: Vec<f64>,
    /// `atom_prefix[k] = sum_{j < k} B_j Y(t_j)`
    atom_prefix: Vec<CMat>,
    density: Option<Arc<DensityTable>>,
    end_inclusive: CMat,
}

struct DensityTable {
    phi: CoeffFn,
    y: Matrizant,
    edges: Vec<f64>,
    cumulative: Vec<CMat>,
}

impl DensityTable {
    fn eval(&self, t: f64) -> CMat {
        let t = t.clamp(self.edges[0], *self.edges.last().expect("edges"));
        let k = match self.edges.binary_search_by(|x| x.total_cmp(&t)) {
            Ok(i) => return self.cumulative[i].clone(),
            Err(i) => i - 1,
        };
        let q = integrate(
            |s| &self.phi.eval(s) * &self.y.eval(s),
            self.edges[k],
            t,
            &[],
            quad_opts(),
        );
        let mut v = self.cumulative[k].clone();
        v += &q.value;
        v
    }
}

impl HTransform {
    fn new(u: &BoundaryMeasure, y: &Matrizant) -> Result<Self> {
        let m = u.dim;
        let mut prefix = Vec::with_capacity(u.atoms.len() + 1);
        let mut acc = CMat::zeros(m);
        prefix.push(acc.clone());
        for atom in &u.atoms {
            acc += &(&atom.weight * &y.eval(atom.location));
            prefix.push(acc.clone());
        }
        let mut end_inclusive = acc;
        let density = u.density.as_ref().map(|phi| {
            let mut bps = u.atom_locations();
            bps.extend_from_slice(phi.breakpoints());
            bps.extend_from_slice(y.breakpoints());
            let cap = panel_cap(u.interval, &[phi.oscillation_scale(), y.oscillation_scale()]);
            let edges = panel_edges(u.interval.a, u.interval.b, &bps, Some(cap));
            let mut cumulative = Vec::with_capacity(edges.len());
            let mut c = CMat::zeros(m);
            cumulative.push(c.clone());
            for w in edges.windows(2) {
                let q = integrate(|s| &phi.eval(s) * &y.eval(s), w[0], w[1], &[], quad_opts());
                c.add_scaled(1.0, &q.value);
                cumulative.push(c.clone());
            }
            end_inclusive += &c;
            Arc::new(DensityTable {
                phi: phi.clone(),
                y: y.clone(),
                edges,
                cumulative,
            })
        });
        Ok(Self {
            atom_locations: u.atom_locations(),
            atom_prefix: prefix,
            density,
            end_inclusive,
        })
    }

    /// `H_Y(t)`: atoms strictly before `t` plus the density integral up to `t`.
    pub fn eval(&self, t: f64) -> CMat {
        let k = self.atom_locations.partition_point(|&x| x < t);
        let mut v = self.atom_prefix[k].clone();
        if let Some(d) = &self.density {
            v += &d.eval(t);
        }
        v
    }

    /// `H_Y(b)` including an atom at `b`; equals `[U Y]`.
    pub fn at_end_inclusive(&self) -> &CMat {
        &self.end_inclusive
    }

    /// `int_t^b [dH(s)] Y(s)` with an atom at `t` included.
    pub fn tail(&self, t: f64) -> CMat {
        &self.end_inclusive - &self.eval(t)
    }
}
