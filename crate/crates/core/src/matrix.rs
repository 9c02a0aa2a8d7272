//! Dense square complex matrices.
//!
//! Sizes in this crate are tiny (gamma matrices are 4×4, Clifford
//! representations at most 16×16), so storage is a flat row-major `Vec`.
//! Eigenvalue and inverse computations delegate to `nalgebra`.

use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MatrixError {
    #[error("dimension mismatch: {left}x{left} vs {right}x{right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("matrix is not square: {rows} rows, row {row} has {len} entries")]
    NotSquare { rows: usize, row: usize, len: usize },
    #[error("matrix is singular")]
    Singular,
    #[error("empty matrix")]
    Empty,
}

/// A dense `n × n` complex matrix.
#[derive(Clone, PartialEq)]
pub struct CMatrix {
    dim: usize,
    data: Vec<Complex64>,
}

impl CMatrix {
    pub fn zeros(dim: usize) -> Self {
        CMatrix {
            dim,
            data: vec![Complex64::new(0.0, 0.0); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn scalar(dim: usize, c: Complex64) -> Self {
        Self::identity(dim).scale(c)
    }

    pub fn diag(entries: &[Complex64]) -> Self {
        let mut m = Self::zeros(entries.len());
        for (i, &e) in entries.iter().enumerate() {
            m.set(i, i, e);
        }
        m
    }

    /// Builds a matrix from rows; every row must have as many entries as
    /// there are rows.
    pub fn from_rows(rows: &[Vec<Complex64>]) -> Result<Self, MatrixError> {
        let dim = rows.len();
        if dim == 0 {
            return Err(MatrixError::Empty);
        }
        let mut data = Vec::with_capacity(dim * dim);
        for (row, r) in rows.iter().enumerate() {
            if r.len() != dim {
                return Err(MatrixError::NotSquare {
                    rows: dim,
                    row,
                    len: r.len(),
                });
            }
            data.extend_from_slice(r);
        }
        Ok(CMatrix { dim, data })
    }

    /// Real-valued convenience constructor, mostly for tests.
    pub fn from_real_rows(rows: &[&[f64]]) -> Result<Self, MatrixError> {
        let rows: Vec<Vec<Complex64>> = rows
            .iter()
            .map(|r| r.iter().map(|&x| Complex64::new(x, 0.0)).collect())
            .collect();
        Self::from_rows(&rows)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[i * self.dim + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: Complex64) {
        self.data[i * self.dim + j] = v;
    }

    pub fn rows(&self) -> Vec<Vec<Complex64>> {
        self.data.chunks(self.dim.max(1)).map(|r| r.to_vec()).collect()
    }

    fn check_dim(&self, other: &CMatrix) -> Result<(), MatrixError> {
        if self.dim != other.dim {
            Err(MatrixError::DimensionMismatch {
                left: self.dim,
                right: other.dim,
            })
        } else {
            Ok(())
        }
    }

    pub fn add(&self, other: &CMatrix) -> Result<CMatrix, MatrixError> {
        self.check_dim(other)?;
        Ok(CMatrix {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + b)
                .collect(),
        })
    }

    pub fn sub(&self, other: &CMatrix) -> Result<CMatrix, MatrixError> {
        self.check_dim(other)?;
        Ok(CMatrix {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a - b)
                .collect(),
        })
    }

    pub fn mul(&self, other: &CMatrix) -> Result<CMatrix, MatrixError> {
        self.check_dim(other)?;
        let n = self.dim;
        let mut out = CMatrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                if a == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += a * other.data[k * n + j];
                }
            }
        }
        Ok(out)
    }

    pub fn scale(&self, c: Complex64) -> CMatrix {
        CMatrix {
            dim: self.dim,
            data: self.data.iter().map(|a| a * c).collect(),
        }
    }

    pub fn neg(&self) -> CMatrix {
        CMatrix {
            dim: self.dim,
            data: self.data.iter().map(|a| -a).collect(),
        }
    }

    /// Adds `c·I`.
    pub fn add_scalar(&self, c: Complex64) -> CMatrix {
        let mut m = self.clone();
        for i in 0..self.dim {
            m.data[i * self.dim + i] += c;
        }
        m
    }

    /// Largest entry modulus.
    pub fn max_norm(&self) -> f64 {
        nan_max(self.data.iter().map(|a| a.norm()))
    }

    /// Induced ∞-norm (maximum absolute row sum).
    pub fn inf_norm(&self) -> f64 {
        nan_max(
            self.data
                .chunks(self.dim.max(1))
                .map(|r| r.iter().map(|a| a.norm()).sum::<f64>()),
        )
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|a| a.re.is_finite() && a.im.is_finite())
    }

    /// `‖self − other‖_max`, or an error on mismatched sizes.
    pub fn max_diff(&self, other: &CMatrix) -> Result<f64, MatrixError> {
        Ok(self.sub(other)?.max_norm())
    }

    /// Integer power by repeated squaring. Negative exponents invert first.
    pub fn powi(&self, exp: i64) -> Result<CMatrix, MatrixError> {
        let mut base = if exp < 0 {
            self.inverse()?
        } else {
            self.clone()
        };
        let mut e = exp.unsigned_abs();
        let mut acc = CMatrix::identity(self.dim);
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base)?;
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base)?;
            }
        }
        Ok(acc)
    }

    pub fn inverse(&self) -> Result<CMatrix, MatrixError> {
        if self.dim == 0 {
            return Err(MatrixError::Empty);
        }
        let inv = self
            .to_nalgebra()
            .try_inverse()
            .ok_or(MatrixError::Singular)?;
        let out = Self::from_nalgebra(&inv);
        if out.is_finite() {
            Ok(out)
        } else {
            Err(MatrixError::Singular)
        }
    }

    /// Eigenvalues via a complex Schur decomposition.
    pub fn eigenvalues(&self) -> Vec<Complex64> {
        if self.dim == 0 {
            return Vec::new();
        }
        if self.dim == 1 {
            return vec![self.data[0]];
        }
        let schur = nalgebra::Schur::new(self.to_nalgebra());
        let (_, t) = schur.unpack();
        (0..self.dim).map(|i| t[(i, i)]).collect()
    }

    pub(crate) fn to_nalgebra(&self) -> DMatrix<Complex64> {
        DMatrix::from_row_slice(self.dim, self.dim, &self.data)
    }

    pub(crate) fn from_nalgebra(m: &DMatrix<Complex64>) -> CMatrix {
        let dim = m.nrows();
        let mut out = CMatrix::zeros(dim);
        for i in 0..dim {
            for j in 0..dim {
                out.set(i, j, m[(i, j)]);
            }
        }
        out
    }
}

/// Maximum of non-negative values that propagates NaN (`f64::max` drops it).
pub(crate) fn nan_max(values: impl IntoIterator<Item = f64>) -> f64 {
    values
        .into_iter()
        .fold(0.0, |acc, v| if acc.is_nan() || v.is_nan() { f64::NAN } else { acc.max(v) })
}

/// Largest eigenvalue modulus of `m`.
pub fn spectral_radius(m: &CMatrix) -> f64 {
    nan_max(m.eigenvalues().into_iter().map(|z| z.norm()))
}

impl fmt::Debug for CMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "CMatrix({}x{}) [", self.dim, self.dim)?;
        for row in self.rows() {
            write!(f, "  ")?;
            for z in row {
                write!(f, "{:>8.4}{:+.4}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

// Serialized as a list of rows of `[re, im]` pairs.
impl Serialize for CMatrix {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.rows().serialize(s)
    }
}

impl<'de> Deserialize<'de> for CMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let rows = Vec::<Vec<Complex64>>::deserialize(d)?;
        CMatrix::from_rows(&rows).map_err(serde::de::Error::custom)
    }
}
