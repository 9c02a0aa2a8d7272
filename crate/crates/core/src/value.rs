//! Runtime values produced by expression evaluation.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::clifford::{geometric_product, CliffordError, Multivector};
use crate::matrix::{CMatrix, MatrixError};

/// Divisors with modulus below this are treated as zero.
pub const MIN_DIVISOR: f64 = 1e-300;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ValueError {
    #[error("cannot combine a multivector with a {0}x{0} matrix")]
    MixedAlgebra(usize),
    #[error("division by a value of modulus {0:e}")]
    DivisionByZero(f64),
    #[error(transparent)]
    Clifford(#[from] CliffordError),
    #[error(transparent)]
    Matrix(#[from] MatrixError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum Value {
    Scalar(Complex64),
    Multivector(Multivector),
    Matrix(CMatrix),
}

impl From<Complex64> for Value {
    fn from(c: Complex64) -> Self {
        Value::Scalar(c)
    }
}

impl From<f64> for Value {
    fn from(x: f64) -> Self {
        Value::Scalar(Complex64::new(x, 0.0))
    }
}

impl From<Multivector> for Value {
    fn from(m: Multivector) -> Self {
        Value::Multivector(m)
    }
}

impl From<CMatrix> for Value {
    fn from(m: CMatrix) -> Self {
        Value::Matrix(m)
    }
}

impl Value {
    pub fn zero() -> Self {
        Value::Scalar(Complex64::new(0.0, 0.0))
    }

    pub fn one() -> Self {
        Value::Scalar(Complex64::new(1.0, 0.0))
    }

    pub fn as_scalar(&self) -> Option<Complex64> {
        match self {
            Value::Scalar(c) => Some(*c),
            Value::Multivector(m) if m.is_scalar() => Some(m.scalar_part()),
            _ => None,
        }
    }

    pub fn is_scalar(&self) -> bool {
        self.as_scalar().is_some()
    }

    /// Largest component modulus.
    pub fn max_norm(&self) -> f64 {
        match self {
            Value::Scalar(c) => c.norm(),
            Value::Multivector(m) => m.max_norm(),
            Value::Matrix(m) => m.max_norm(),
        }
    }

    pub fn is_finite(&self) -> bool {
        match self {
            Value::Scalar(c) => c.re.is_finite() && c.im.is_finite(),
            Value::Multivector(m) => m.terms().all(|(_, c)| c.re.is_finite() && c.im.is_finite()),
            Value::Matrix(m) => m.is_finite(),
        }
    }

    /// Promotes to a `dim × dim` matrix: scalars become `c·I`.
    pub fn to_matrix(&self, dim: usize) -> Result<CMatrix, ValueError> {
        match self {
            Value::Matrix(m) if m.dim() == dim => Ok(m.clone()),
            Value::Matrix(m) => Err(MatrixError::DimensionMismatch {
                left: m.dim(),
                right: dim,
            }
            .into()),
            other => match other.as_scalar() {
                Some(c) => Ok(CMatrix::scalar(dim, c)),
                None => Err(ValueError::MixedAlgebra(dim)),
            },
        }
    }

    pub fn scale(&self, c: Complex64) -> Value {
        match self {
            Value::Scalar(s) => Value::Scalar(s * c),
            Value::Multivector(m) => Value::Multivector(m.scale(c)),
            Value::Matrix(m) => Value::Matrix(m.scale(c)),
        }
    }

    pub fn neg(&self) -> Value {
        self.scale(Complex64::new(-1.0, 0.0))
    }

    pub fn add(&self, other: &Value) -> Result<Value, ValueError> {
        use Value::*;
        Ok(match (self, other) {
            (Scalar(a), Scalar(b)) => Scalar(a + b),
            (Scalar(a), Multivector(m)) | (Multivector(m), Scalar(a)) => Multivector(m.add_scalar(*a)),
            (Scalar(a), Matrix(m)) | (Matrix(m), Scalar(a)) => Matrix(m.add_scalar(*a)),
            (Multivector(a), Multivector(b)) => Multivector(a.add(b)?),
            (Matrix(a), Matrix(b)) => Matrix(a.add(b)?),
            (Multivector(mv), Matrix(m)) | (Matrix(m), Multivector(mv)) => match mv.is_scalar() {
                true => Matrix(m.add_scalar(mv.scalar_part())),
                false => return Err(ValueError::MixedAlgebra(m.dim())),
            },
        })
    }

    pub fn sub(&self, other: &Value) -> Result<Value, ValueError> {
        self.add(&other.neg())
    }

    /// Geometric product when a multivector participates, matrix product
    /// when a matrix does.
    pub fn mul(&self, other: &Value) -> Result<Value, ValueError> {
        use Value::*;
        Ok(match (self, other) {
            (Scalar(a), Scalar(b)) => Scalar(a * b),
            (Scalar(a), v) | (v, Scalar(a)) => v.scale(*a),
            (Multivector(a), Multivector(b)) => Multivector(geometric_product(a, b)?),
            (Matrix(a), Matrix(b)) => Matrix(a.mul(b)?),
            (Multivector(mv), Matrix(m)) | (Matrix(m), Multivector(mv)) => match mv.is_scalar() {
                true => Matrix(m.scale(mv.scalar_part())),
                false => return Err(ValueError::MixedAlgebra(m.dim())),
            },
        })
    }

    pub fn inverse(&self) -> Result<Value, ValueError> {
        match self {
            Value::Scalar(c) => {
                if c.norm() < MIN_DIVISOR {
                    Err(ValueError::DivisionByZero(c.norm()))
                } else {
                    Ok(Value::Scalar(c.inv()))
                }
            }
            Value::Multivector(m) => {
                if m.max_norm() < MIN_DIVISOR {
                    return Err(ValueError::DivisionByZero(m.max_norm()));
                }
                Ok(Value::Multivector(m.inverse()?))
            }
            Value::Matrix(m) => Ok(Value::Matrix(m.inverse()?)),
        }
    }

    /// `self · other⁻¹`.
    pub fn div(&self, other: &Value) -> Result<Value, ValueError> {
        self.mul(&other.inverse()?)
    }

    /// Integer power by repeated squaring.
    pub fn powi(&self, exp: i64) -> Result<Value, ValueError> {
        let mut base = if exp < 0 { self.inverse()? } else { self.clone() };
        let mut e = exp.unsigned_abs();
        let mut acc = Value::one();
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

    /// Exponential. Non-scalar arguments use a scaled Taylor series followed
    /// by repeated squaring.
    pub fn exp(&self) -> Result<Value, ValueError> {
        if let Value::Scalar(c) = self {
            return Ok(Value::Scalar(c.exp()));
        }
        let norm = self.max_norm();
        if !norm.is_finite() {
            return Ok(self.scale(Complex64::new(f64::NAN, 0.0)));
        }
        let mut squarings = 0u32;
        let mut scaled_norm = norm;
        while scaled_norm > 0.25 && squarings < 64 {
            scaled_norm /= 2.0;
            squarings += 1;
        }
        let x = self.scale(Complex64::new(0.5f64.powi(squarings as i32), 0.0));
        let mut term = Value::one();
        let mut sum = Value::one();
        for k in 1..=30 {
            term = term.mul(&x)?.scale(Complex64::new(1.0 / k as f64, 0.0));
            sum = sum.add(&term)?;
        }
        for _ in 0..squarings {
            sum = sum.mul(&sum)?;
        }
        Ok(sum)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clifford::Signature;

    #[test]
    fn mixed_products_follow_operand_kind() {
        let s = Signature::negative(2).unwrap();
        let e1 = Value::Multivector(Multivector::generator(s, 1).unwrap());
        let sq = e1.mul(&e1).unwrap();
        assert_eq!(sq.as_scalar(), Some(Complex64::new(-1.0, 0.0)));

        let m = Value::Matrix(CMatrix::identity(2));
        assert!(matches!(e1.mul(&m), Err(ValueError::MixedAlgebra(2))));
        let two = Value::from(2.0);
        assert_eq!(two.mul(&m).unwrap(), Value::Matrix(CMatrix::scalar(2, Complex64::new(2.0, 0.0))));
    }

    #[test]
    fn tiny_divisor_rejected() {
        let err = Value::one().div(&Value::from(1e-310)).unwrap_err();
        assert!(matches!(err, ValueError::DivisionByZero(_)));
    }

    #[test]
    fn exp_of_generator_is_rotation() {
        // exp(θ e1) = cos θ + e1 sin θ when e1² = −1
        let s = Signature::negative(1).unwrap();
        let theta = 0.7;
        let arg = Value::Multivector(Multivector::generator(s, 1).unwrap().scale(Complex64::new(theta, 0.0)));
        let Value::Multivector(r) = arg.exp().unwrap() else {
            panic!("expected multivector");
        };
        assert!((r.get(0) - Complex64::new(theta.cos(), 0.0)).norm() < 1e-14);
        assert!((r.get(1) - Complex64::new(theta.sin(), 0.0)).norm() < 1e-14);
    }

    #[test]
    fn matrix_exp_matches_diagonal() {
        let m = Value::Matrix(CMatrix::diag(&[Complex64::new(1.5, 0.0), Complex64::new(-2.0, 0.5)]));
        let Value::Matrix(e) = m.exp().unwrap() else {
            panic!("expected matrix");
        };
        assert!((e.get(0, 0) - Complex64::new(1.5, 0.0).exp()).norm() < 1e-12);
        assert!((e.get(1, 1) - Complex64::new(-2.0, 0.5).exp()).norm() < 1e-12);
    }

    #[test]
    fn powers() {
        let x = Value::from(2.0);
        assert_eq!(x.powi(10).unwrap(), Value::from(1024.0));
        assert_eq!(x.powi(-2).unwrap(), Value::from(0.25));
        assert_eq!(x.powi(0).unwrap(), Value::one());
    }
}
