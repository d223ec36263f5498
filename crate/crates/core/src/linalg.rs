//! Dense complex linear algebra for small systems.
//!
//! Matrices here are tiny (the coefficient dimension `m` of an ODE system,
//! typically 1 to 8), so everything is a flat row-major `Vec` with
//! partial-pivoted LU and no blocking.
//!
//! The norm used throughout is the entrywise sum `|X| = sum_ij |x_ij|`; the
//! matrix norm induced by the entrywise-sum vector norm is the maximum absolute
//! column sum ([`CMat::induced_norm`]).

use std::fmt;
use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub, SubAssign};

use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Largest supported system dimension.
pub const MAX_DIM: usize = 16;

/// Relative pivot threshold below which a matrix is treated as singular.
pub const SINGULAR_RTOL: f64 = 1e-13;

/// Values that carry the entrywise-sum norm.
pub trait AbsNorm {
    fn abs_norm(&self) -> f64;
}

impl AbsNorm for f64 {
    fn abs_norm(&self) -> f64 {
        self.abs()
    }
}

impl AbsNorm for C64 {
    fn abs_norm(&self) -> f64 {
        self.norm()
    }
}

/// Dense complex `m x m` matrix, row-major.
#[derive(Clone, PartialEq)]
pub struct CMat {
    dim: usize,
    data: Vec<C64>,
}

/// Dense complex `m`-vector.
#[derive(Clone, PartialEq)]
pub struct CVec {
    data: Vec<C64>,
}

impl CMat {
    pub fn zeros(dim: usize) -> Self {
        assert!(dim >= 1, "matrix dimension must be positive");
        Self {
            dim,
            data: vec![C64::new(0.0, 0.0); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = C64::new(1.0, 0.0);
        }
        m
    }

    /// Builds from a row-major slice of length `dim * dim`.
    pub fn from_row_major(dim: usize, data: Vec<C64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument("matrix dimension must be positive".into()));
        }
        if data.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                found: data.len(),
            });
        }
        Ok(Self { dim, data })
    }

    pub fn from_rows(rows: &[Vec<C64>]) -> Result<Self> {
        let dim = rows.len();
        let mut data = Vec::with_capacity(dim * dim);
        for row in rows {
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Self::from_row_major(dim, data)
    }

    /// Builds from separate real and imaginary row arrays.
    pub fn from_parts(re: &[Vec<f64>], im: &[Vec<f64>]) -> Result<Self> {
        if re.len() != im.len() {
            return Err(Error::DimensionMismatch {
                expected: re.len(),
                found: im.len(),
            });
        }
        let rows = re
            .iter()
            .zip(im)
            .map(|(r, i)| {
                if r.len() != i.len() {
                    return Err(Error::DimensionMismatch {
                        expected: r.len(),
                        found: i.len(),
                    });
                }
                Ok(r.iter().zip(i).map(|(&x, &y)| C64::new(x, y)).collect())
            })
            .collect::<Result<Vec<Vec<C64>>>>()?;
        Self::from_rows(&rows)
    }

    pub fn from_real(rows: &[&[f64]]) -> Self {
        let rows: Vec<Vec<C64>> = rows
            .iter()
            .map(|r| r.iter().map(|&x| C64::new(x, 0.0)).collect())
            .collect();
        Self::from_rows(&rows).expect("square real matrix")
    }

    pub fn diag(values: &[C64]) -> Self {
        let mut m = Self::zeros(values.len());
        for (i, &v) in values.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    pub fn from_columns(cols: &[CVec]) -> Result<Self> {
        let dim = cols.len();
        if dim == 0 {
            return Err(Error::InvalidArgument("no columns".into()));
        }
        let mut m = Self::zeros(dim);
        for (j, c) in cols.iter().enumerate() {
            if c.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: c.dim(),
                });
            }
            for i in 0..dim {
                m[(i, j)] = c[i];
            }
        }
        Ok(m)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [C64] {
        &mut self.data
    }

    pub fn column(&self, j: usize) -> CVec {
        CVec::from_vec((0..self.dim).map(|i| self[(i, j)]).collect())
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|z| z.re == 0.0 && z.im == 0.0)
    }

    /// Maximum absolute column sum: the norm induced by the entrywise-sum vector norm.
    pub fn induced_norm(&self) -> f64 {
        (0..self.dim)
            .map(|j| (0..self.dim).map(|i| self[(i, j)].norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn row_abs_sums(&self) -> Vec<f64> {
        self.data
            .chunks(self.dim)
            .map(|r| r.iter().map(|z| z.norm()).sum())
            .collect()
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|i| self[(i, i)]).sum()
    }

    pub fn scale(&self, s: C64) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|&z| z * s).collect(),
        }
    }

    pub fn mul_vec(&self, v: &CVec) -> CVec {
        assert_eq!(self.dim, v.dim(), "matrix-vector dimension mismatch");
        CVec::from_vec(
            self.data
                .chunks(self.dim)
                .map(|row| row.iter().zip(v.as_slice()).map(|(a, b)| a * b).sum())
                .collect(),
        )
    }

    /// `self += s * other`
    pub fn axpy(&mut self, s: C64, other: &CMat) {
        assert_eq!(self.dim, other.dim);
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += s * b;
        }
    }

    pub fn lu(&self) -> Lu {
        Lu::new(self)
    }

    pub fn det(&self) -> C64 {
        self.lu().det()
    }

    pub fn inverse(&self) -> Result<CMat> {
        self.lu().solve_mat(&CMat::identity(self.dim))
    }

    pub fn solve(&self, rhs: &CVec) -> Result<CVec> {
        self.lu().solve_vec(rhs)
    }

    pub fn solve_mat(&self, rhs: &CMat) -> Result<CMat> {
        self.lu().solve_mat(rhs)
    }
}

impl AbsNorm for CMat {
    fn abs_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).sum()
    }
}

impl Index<(usize, usize)> for CMat {
    type Output = C64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.dim + j]
    }
}

impl IndexMut<(usize, usize)> for CMat {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.dim + j]
    }
}

impl fmt::Debug for CMat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.data.chunks(self.dim)).finish()
    }
}

impl Mul for &CMat {
    type Output = CMat;
    fn mul(self, rhs: &CMat) -> CMat {
        assert_eq!(self.dim, rhs.dim, "matrix product dimension mismatch");
        let n = self.dim;
        let mut out = CMat::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                if a.re == 0.0 && a.im == 0.0 {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += a * rhs.data[k * n + j];
                }
            }
        }
        out
    }
}

impl Mul for CMat {
    type Output = CMat;
    fn mul(self, rhs: CMat) -> CMat {
        &self * &rhs
    }
}

impl Mul<&CVec> for &CMat {
    type Output = CVec;
    fn mul(self, rhs: &CVec) -> CVec {
        self.mul_vec(rhs)
    }
}

macro_rules! elementwise {
    ($ty:ident, $trait:ident, $method:ident, $assign_trait:ident, $assign:ident, $op:tt) => {
        impl $trait for &$ty {
            type Output = $ty;
            fn $method(self, rhs: &$ty) -> $ty {
                let mut out = self.clone();
                out.$assign(rhs);
                out
            }
        }
        impl $trait for $ty {
            type Output = $ty;
            fn $method(mut self, rhs: $ty) -> $ty {
                self.$assign(&rhs);
                self
            }
        }
        impl $assign_trait<&$ty> for $ty {
            fn $assign(&mut self, rhs: &$ty) {
                assert_eq!(self.data.len(), rhs.data.len(), "dimension mismatch");
                for (a, b) in self.data.iter_mut().zip(&rhs.data) {
                    *a $op *b;
                }
            }
        }
    };
}

elementwise!(CMat, Add, add, AddAssign, add_assign, +=);
elementwise!(CMat, Sub, sub, SubAssign, sub_assign, -=);
elementwise!(CVec, Add, add, AddAssign, add_assign, +=);
elementwise!(CVec, Sub, sub, SubAssign, sub_assign, -=);

impl Neg for CMat {
    type Output = CMat;
    fn neg(self) -> CMat {
        self.scale(C64::new(-1.0, 0.0))
    }
}

impl CVec {
    pub fn zeros(dim: usize) -> Self {
        assert!(dim >= 1, "vector dimension must be positive");
        Self {
            data: vec![C64::new(0.0, 0.0); dim],
        }
    }

    pub fn from_vec(data: Vec<C64>) -> Self {
        assert!(!data.is_empty(), "vector dimension must be positive");
        Self { data }
    }

    pub fn from_real(values: &[f64]) -> Self {
        Self::from_vec(values.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    pub fn from_parts(re: &[f64], im: &[f64]) -> Result<Self> {
        if re.len() != im.len() {
            return Err(Error::DimensionMismatch {
                expected: re.len(),
                found: im.len(),
            });
        }
        if re.is_empty() {
            return Err(Error::InvalidArgument("vector dimension must be positive".into()));
        }
        Ok(Self::from_vec(
            re.iter().zip(im).map(|(&a, &b)| C64::new(a, b)).collect(),
        ))
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.data.len()
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [C64] {
        &mut self.data
    }

    pub fn scale(&self, s: C64) -> Self {
        Self {
            data: self.data.iter().map(|&z| z * s).collect(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn into_vec(self) -> Vec<C64> {
        self.data
    }
}

impl AbsNorm for CVec {
    fn abs_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).sum()
    }
}

impl Index<usize> for CVec {
    type Output = C64;
    fn index(&self, i: usize) -> &C64 {
        &self.data[i]
    }
}

impl IndexMut<usize> for CVec {
    fn index_mut(&mut self, i: usize) -> &mut C64 {
        &mut self.data[i]
    }
}

impl fmt::Debug for CVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(&self.data).finish()
    }
}

/// Partial-pivoted LU factorization `P M = L U`.
#[derive(Clone, Debug)]
pub struct Lu {
    dim: usize,
    factors: Vec<C64>,
    perm: Vec<usize>,
    sign: f64,
    min_pivot: f64,
    threshold: f64,
}

impl Lu {
    pub fn new(m: &CMat) -> Self {
        let n = m.dim;
        let mut a = m.data.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut sign = 1.0;
        let mut min_pivot = f64::INFINITY;
        for k in 0..n {
            let (p, pmag) = (k..n)
                .map(|i| (i, a[i * n + k].norm()))
                .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
            min_pivot = min_pivot.min(pmag);
            if p != k {
                for j in 0..n {
                    a.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
                sign = -sign;
            }
            let pivot = a[k * n + k];
            if pmag == 0.0 {
                continue;
            }
            for i in (k + 1)..n {
                let l = a[i * n + k] / pivot;
                a[i * n + k] = l;
                if l.re == 0.0 && l.im == 0.0 {
                    continue;
                }
                for j in (k + 1)..n {
                    let u = a[k * n + j];
                    a[i * n + j] -= l * u;
                }
            }
        }
        Self {
            dim: n,
            factors: a,
            perm,
            sign,
            min_pivot,
            threshold: SINGULAR_RTOL * m.abs_norm(),
        }
    }

    pub fn det(&self) -> C64 {
        let n = self.dim;
        (0..n).fold(C64::new(self.sign, 0.0), |acc, k| acc * self.factors[k * n + k])
    }

    pub fn is_singular(&self) -> bool {
        !(self.min_pivot > self.threshold)
    }

    fn check(&self) -> Result<()> {
        if self.is_singular() {
            Err(Error::Singular {
                pivot: self.min_pivot,
                threshold: self.threshold,
            })
        } else {
            Ok(())
        }
    }

    fn solve_in_place(&self, b: &mut [C64]) {
        let n = self.dim;
        let mut x: Vec<C64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let mut s = x[i];
            for j in 0..i {
                s -= self.factors[i * n + j] * x[j];
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for j in (i + 1)..n {
                s -= self.factors[i * n + j] * x[j];
            }
            x[i] = s / self.factors[i * n + i];
        }
        b.copy_from_slice(&x);
    }

    pub fn solve_vec(&self, rhs: &CVec) -> Result<CVec> {
        if rhs.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: rhs.dim(),
            });
        }
        self.check()?;
        let mut x = rhs.clone();
        self.solve_in_place(x.as_mut_slice());
        Ok(x)
    }

    pub fn solve_mat(&self, rhs: &CMat) -> Result<CMat> {
        if rhs.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: rhs.dim(),
            });
        }
        self.check()?;
        let n = self.dim;
        let mut out = CMat::zeros(n);
        let mut col = vec![C64::new(0.0, 0.0); n];
        for j in 0..n {
            for i in 0..n {
                col[i] = rhs[(i, j)];
            }
            self.solve_in_place(&mut col);
            for i in 0..n {
                out[(i, j)] = col[i];
            }
        }
        Ok(out)
    }
}
