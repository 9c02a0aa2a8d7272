//! q-deformed spinor calculus: Clifford and gamma algebras, a small
//! symbolic expression engine, Jackson-type q-derivatives, the q-Dirac
//! family of operators, Neumann-series integral formulas and pointwise
//! solvers with residual audits.
//!
//! ```
//! use qspin_core::expr::parse;
//! use qspin_core::qderiv::{jackson_deriv, QContext};
//!
//! let d = jackson_deriv(&parse("x^2").unwrap(), "x", &QContext::default());
//! assert_eq!(d.to_string(), "(q+1)*x");
//! ```

pub mod clifford;
pub mod expr;
pub mod matrix;
pub mod qderiv;
pub mod qintegral;
pub mod qoperators;
pub mod qsolve;
pub mod value;
pub mod verify;

pub use clifford::{GammaSet, Multivector, Representation, Signature};
pub use expr::{eval, parse, simplify, Binding, Expr};
pub use matrix::CMatrix;
pub use qderiv::QContext;
pub use value::Value;
