//! JSON scenario configuration.
//!
//! ```json
//! {
//!   "name": "example2",
//!   "interval": [0.0, 1.0],
//!   "dim": 1,
//!   "epsilons": [0.1, 0.05, 0.01],
//!   "family": { "registry": "example2" },
//!   "f": { "name": "constant", "params": { "value": { "re": [1.0] } } },
//!   "c": { "re": [0.0] },
//!   "tolerances": { "ode": 1e-9 },
//!   "grids": { "sup": 2001, "green": 201, "trace": 201 },
//!   "outputs": { "csv": "example2.csv", "json": "example2.json" }
//! }
//! ```
//!
//! Boundary operators are written as `{"atoms": [[t, re, im], ...],
//! "density": {"name": ..., "params": {...}}}` with `re`/`im` as row arrays.
//! Families either name a registry entry (`{"registry": ..., "params": ...}`)
//! or compose `A(eps) = baseline + perturbation(eps)` from coefficient
//! entries (`{"baseline": {...}, "perturbation": {...}}`).

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::lab::{default_epsilons, validate_epsilons, FamilyScenario, SweepSettings};
use crate::linalg::{CMat, CVec, MAX_DIM};
use crate::ode::Interval;
use crate::registry;

/// Largest absolute value accepted for any numeric parameter.
pub const MAX_MAGNITUDE: f64 = 1e12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixSpec {
    pub re: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub im: Option<Vec<Vec<f64>>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VecSpec {
    pub re: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub im: Option<Vec<f64>>,
}

/// `[t, re_rows, im_rows]`
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AtomSpec(pub f64, pub Vec<Vec<f64>>, pub Vec<Vec<f64>>);

/// A registry reference with numeric parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NamedSpec {
    pub name: String,
    #[serde(default, skip_serializing_if = "Map::is_empty")]
    pub params: Map<String, Value>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundarySpec {
    #[serde(default)]
    pub atoms: Vec<AtomSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub density: Option<NamedSpec>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilySpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub registry: Option<String>,
    #[serde(default, skip_serializing_if = "Map::is_empty")]
    pub params: Map<String, Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub baseline: Option<NamedSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub perturbation: Option<NamedSpec>,
}

fn default_tol() -> f64 {
    1e-9
}
fn default_sup() -> usize {
    2001
}
fn default_green() -> usize {
    201
}
fn default_trace() -> usize {
    201
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceSpec {
    #[serde(default = "default_tol")]
    pub ode: f64,
}

impl Default for ToleranceSpec {
    fn default() -> Self {
        Self { ode: default_tol() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    #[serde(default = "default_sup")]
    pub sup: usize,
    #[serde(default = "default_green")]
    pub green: usize,
    #[serde(default = "default_trace")]
    pub trace: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            sup: default_sup(),
            green: default_green(),
            trace: default_trace(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub csv: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub json: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    pub interval: [f64; 2],
    pub dim: usize,
    #[serde(default = "default_epsilons")]
    pub epsilons: Vec<f64>,
    pub family: FamilySpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub boundary: Option<BoundarySpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f: Option<NamedSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<VecSpec>,
    #[serde(default)]
    pub tolerances: ToleranceSpec,
    #[serde(default)]
    pub grids: GridSpec,
    #[serde(default)]
    pub outputs: OutputSpec,
}

fn check_number(path: &str, x: f64) -> Result<f64> {
    if !x.is_finite() || x.abs() > MAX_MAGNITUDE {
        return Err(Error::config(path, format!("value {x} is not finite or exceeds {MAX_MAGNITUDE:e}")));
    }
    Ok(x)
}

fn check_rows(path: &str, rows: &[Vec<f64>], dim: usize) -> Result<()> {
    if rows.len() != dim {
        return Err(Error::config(path, format!("expected {dim} rows, found {}", rows.len())));
    }
    for (i, r) in rows.iter().enumerate() {
        if r.len() != dim {
            return Err(Error::config(
                format!("{path}[{i}]"),
                format!("expected {dim} entries, found {}", r.len()),
            ));
        }
        for (j, &x) in r.iter().enumerate() {
            check_number(&format!("{path}[{i}][{j}]"), x)?;
        }
    }
    Ok(())
}

impl MatrixSpec {
    pub fn to_matrix(&self, path: &str, dim: usize) -> Result<CMat> {
        check_rows(&format!("{path}.re"), &self.re, dim)?;
        let zeros = vec![vec![0.0; dim]; dim];
        let im = self.im.as_ref().unwrap_or(&zeros);
        check_rows(&format!("{path}.im"), im, dim)?;
        CMat::from_parts(&self.re, im).map_err(|e| Error::config(path, e.to_string()))
    }

    pub fn from_matrix(m: &CMat) -> Self {
        let n = m.dim();
        let re = (0..n).map(|i| (0..n).map(|j| m[(i, j)].re).collect()).collect();
        let im: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| m[(i, j)].im).collect()).collect();
        let has_im = im.iter().flatten().any(|&x| x != 0.0);
        Self {
            re,
            im: has_im.then_some(im),
        }
    }
}

impl VecSpec {
    pub fn to_vector(&self, path: &str, dim: usize) -> Result<CVec> {
        if self.re.len() != dim {
            return Err(Error::config(
                format!("{path}.re"),
                format!("expected {dim} entries, found {}", self.re.len()),
            ));
        }
        let im = self.im.clone().unwrap_or_else(|| vec![0.0; dim]);
        if im.len() != dim {
            return Err(Error::config(
                format!("{path}.im"),
                format!("expected {dim} entries, found {}", im.len()),
            ));
        }
        for (i, (&r, &m)) in self.re.iter().zip(&im).enumerate() {
            check_number(&format!("{path}.re[{i}]"), r)?;
            check_number(&format!("{path}.im[{i}]"), m)?;
        }
        CVec::from_parts(&self.re, &im).map_err(|e| Error::config(path, e.to_string()))
    }
}

impl AtomSpec {
    pub fn to_atom(&self, path: &str, interval: Interval, dim: usize) -> Result<(f64, CMat)> {
        let t = check_number(&format!("{path}[0]"), self.0)?;
        if !interval.contains(t) {
            return Err(Error::config(
                format!("{path}[0]"),
                format!("location {t} outside [{}, {}]", interval.a, interval.b),
            ));
        }
        check_rows(&format!("{path}[1]"), &self.1, dim)?;
        check_rows(&format!("{path}[2]"), &self.2, dim)?;
        let w = CMat::from_parts(&self.1, &self.2).map_err(|e| Error::config(path, e.to_string()))?;
        Ok((t, w))
    }
}

/// Typed access to a `params` object with field paths in error messages.
pub struct Params<'a> {
    path: String,
    map: &'a Map<String, Value>,
}

impl<'a> Params<'a> {
    pub fn new(path: impl Into<String>, map: &'a Map<String, Value>) -> Self {
        Self { path: path.into(), map }
    }

    fn field(&self, key: &str) -> String {
        format!("{}.{key}", self.path)
    }

    /// Rejects keys outside `allowed`.
    pub fn only(&self, allowed: &[&str]) -> Result<()> {
        for key in self.map.keys() {
            if !allowed.contains(&key.as_str()) {
                return Err(Error::config(
                    self.field(key),
                    format!("unknown parameter (expected one of: {})", allowed.join(", ")),
                ));
            }
        }
        Ok(())
    }

    fn decode<T: for<'de> Deserialize<'de>>(&self, key: &str) -> Result<Option<T>> {
        self.map
            .get(key)
            .map(|v| serde_json::from_value(v.clone()).map_err(|e| Error::config(self.field(key), e.to_string())))
            .transpose()
    }

    pub fn number(&self, key: &str) -> Result<Option<f64>> {
        self.decode::<f64>(key)?
            .map(|x| check_number(&self.field(key), x))
            .transpose()
    }

    pub fn numbers(&self, key: &str) -> Result<Option<Vec<f64>>> {
        let Some(v) = self.decode::<Vec<f64>>(key)? else {
            return Ok(None);
        };
        for (i, &x) in v.iter().enumerate() {
            check_number(&format!("{}[{i}]", self.field(key)), x)?;
        }
        Ok(Some(v))
    }

    pub fn matrix(&self, key: &str, dim: usize) -> Result<Option<CMat>> {
        self.decode::<MatrixSpec>(key)?
            .map(|m| m.to_matrix(&self.field(key), dim))
            .transpose()
    }

    pub fn matrices(&self, key: &str, dim: usize) -> Result<Option<Vec<CMat>>> {
        let Some(list) = self.decode::<Vec<MatrixSpec>>(key)? else {
            return Ok(None);
        };
        list.iter()
            .enumerate()
            .map(|(i, m)| m.to_matrix(&format!("{}[{i}]", self.field(key)), dim))
            .collect::<Result<Vec<_>>>()
            .map(Some)
    }

    pub fn vector(&self, key: &str, dim: usize) -> Result<Option<CVec>> {
        self.decode::<VecSpec>(key)?
            .map(|v| v.to_vector(&self.field(key), dim))
            .transpose()
    }

    pub fn require<T>(&self, key: &str, value: Option<T>) -> Result<T> {
        value.ok_or_else(|| Error::config(self.field(key), "required parameter missing"))
    }

    pub fn path(&self) -> &str {
        &self.path
    }
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| {
            Error::config(format!("<json line {} column {}>", e.line(), e.column()), e.to_string())
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn interval(&self) -> Result<Interval> {
        let [a, b] = self.interval;
        check_number("interval[0]", a)?;
        check_number("interval[1]", b)?;
        Interval::new(a, b).map_err(|e| Error::config("interval", e.to_string()))
    }

    pub fn settings(&self) -> SweepSettings {
        SweepSettings {
            tol: self.tolerances.ode,
            sup_grid: self.grids.sup,
            green_grid: self.grids.green,
            jobs: 0,
        }
    }

    /// Structural validation; does not touch the registry.
    pub fn validate(&self) -> Result<()> {
        if self.name.trim().is_empty() {
            return Err(Error::config("name", "must not be empty"));
        }
        if !(1..=MAX_DIM).contains(&self.dim) {
            return Err(Error::config("dim", format!("must be in 1..={MAX_DIM}")));
        }
        let interval = self.interval()?;
        validate_epsilons(&self.epsilons)?;
        if self.epsilons.len() > 64 {
            return Err(Error::config("epsilons", "at most 64 values"));
        }
        for (i, &e) in self.epsilons.iter().enumerate() {
            if e > interval.length() {
                return Err(Error::config(format!("epsilons[{i}]"), "exceeds the interval length"));
            }
        }
        let tol = self.tolerances.ode;
        if !(1e-12..=1e-2).contains(&tol) {
            return Err(Error::config("tolerances.ode", "must lie in [1e-12, 1e-2]"));
        }
        if !(2..=1_000_000).contains(&self.grids.sup) {
            return Err(Error::config("grids.sup", "must lie in 2..=1000000"));
        }
        if !(2..=2000).contains(&self.grids.green) {
            return Err(Error::config("grids.green", "must lie in 2..=2000"));
        }
        if !(2..=1_000_000).contains(&self.grids.trace) {
            return Err(Error::config("grids.trace", "must lie in 2..=1000000"));
        }
        if let Some(b) = &self.boundary {
            if b.atoms.len() > 1000 {
                return Err(Error::config("boundary.atoms", "at most 1000 atoms"));
            }
            for (k, atom) in b.atoms.iter().enumerate() {
                atom.to_atom(&format!("boundary.atoms[{k}]"), interval, self.dim)?;
            }
        }
        if let Some(c) = &self.c {
            c.to_vector("c", self.dim)?;
        }
        let fam = &self.family;
        match (&fam.registry, &fam.baseline, &fam.perturbation) {
            (Some(_), None, None) => {}
            (None, Some(_), Some(_)) => {
                if !fam.params.is_empty() {
                    return Err(Error::config("family.params", "not used by a composed family"));
                }
            }
            _ => {
                return Err(Error::config(
                    "family",
                    "give either \"registry\" (+ \"params\") or both \"baseline\" and \"perturbation\"",
                ))
            }
        }
        Ok(())
    }

    /// Validates and resolves against the registry without integrating anything.
    pub fn resolve(&self) -> Result<FamilyScenario> {
        self.validate()?;
        let family = registry::resolve_family(self)?;
        FamilyScenario::unchecked(self.name.clone(), self.epsilons.clone(), family, self.settings())
    }

    /// Resolves and checks that the `eps = 0` problem is well-posed.
    pub fn build(&self) -> Result<FamilyScenario> {
        self.validate()?;
        let family = registry::resolve_family(self)?;
        FamilyScenario::new(self.name.clone(), self.epsilons.clone(), family, self.settings())
    }
}
