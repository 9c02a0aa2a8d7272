//! Jackson, modified and directional q-derivatives, and the q-spinor chain
//! rule.
//!
//! All symbolic derivatives keep `q` as the symbol `q`; [`QContext`] supplies
//! the numeric value when a result is evaluated.
//!
//! The modified derivative is normalized by `(q-1)·x`:
//!
//! ```text
//! D̃_q f(x) = (f(q·x) − q·f(x)) / ((q − 1)·x)
//! ```
//!
//! Taken literally, the difference quotient behind the chain rule has the
//! denominator `q·x − q·x = 0`. Reading `(qu)` as the argument scaling
//! `u ↦ q·u` and dividing by `(q−1)·u` is what makes the quotient finite.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::clifford::Multivector;
use crate::expr::{eval, simplify, Binding, EvalError, Expr, VarKind};
use crate::value::Value;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QDerivError {
    #[error("invalid q-context: {0}")]
    InvalidContext(String),
    #[error("direction must be a single unit generator")]
    NotAGenerator,
    #[error("step variable `{0}` is not a spinor indeterminate")]
    NotSpinor(String),
    #[error("outer function depends on `{0}`; expected a single spinor variable")]
    OuterNotSpinorFunction(String),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// Deformation parameter and numeric settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QContext {
    q: f64,
    tol: f64,
    max_terms: usize,
    x0: Complex64,
}

impl Default for QContext {
    fn default() -> Self {
        QContext {
            q: 0.5,
            tol: 1e-10,
            max_terms: 1000,
            x0: Complex64::new(1.0, 0.0),
        }
    }
}

impl QContext {
    pub fn new(q: f64) -> Result<Self, QDerivError> {
        QContext::default().with_q(q)
    }

    pub fn with_q(mut self, q: f64) -> Result<Self, QDerivError> {
        if !q.is_finite() || q <= 0.0 || q == 1.0 {
            return Err(QDerivError::InvalidContext(format!(
                "q must be finite, positive and different from 1 (got {q})"
            )));
        }
        self.q = q;
        Ok(self)
    }

    pub fn with_tol(mut self, tol: f64) -> Result<Self, QDerivError> {
        if !(tol.is_finite() && tol > 0.0) {
            return Err(QDerivError::InvalidContext(format!("tol must be positive (got {tol})")));
        }
        self.tol = tol;
        Ok(self)
    }

    pub fn with_max_terms(mut self, max_terms: usize) -> Result<Self, QDerivError> {
        if max_terms == 0 {
            return Err(QDerivError::InvalidContext("max_terms must be at least 1".into()));
        }
        self.max_terms = max_terms;
        Ok(self)
    }

    pub fn with_x0(mut self, x0: Complex64) -> Result<Self, QDerivError> {
        if !(x0.re.is_finite() && x0.im.is_finite()) {
            return Err(QDerivError::InvalidContext(format!("x0 must be finite (got {x0})")));
        }
        self.x0 = x0;
        Ok(self)
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn q_complex(&self) -> Complex64 {
        Complex64::new(self.q, 0.0)
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    pub fn max_terms(&self) -> usize {
        self.max_terms
    }

    pub fn x0(&self) -> Complex64 {
        self.x0
    }

    /// `base` with `q` bound to this context's value.
    pub fn bind(&self, base: Binding) -> Binding {
        base.with("q", self.q)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum QDerivKind {
    Jackson,
    Modified,
    /// Shift `coord ↦ coord + q·e_k·step` divided by `step`.
    Directional { generator: u8, step: String },
}

impl QDerivKind {
    pub fn directional(generator: u8, step: impl Into<String>) -> Result<Self, QDerivError> {
        let step = step.into();
        if !VarKind::of(&step).is_spinor() {
            return Err(QDerivError::NotSpinor(step));
        }
        Ok(QDerivKind::Directional { generator, step })
    }
}

fn scaled(var: &str) -> Expr {
    Expr::q().mul(Expr::var(var))
}

fn normalizer(var: &str) -> Expr {
    Expr::q().sub(Expr::num(1.0)).mul(Expr::var(var))
}

/// `(f(q·x) − f(x)) / ((q−1)·x)`, simplified.
pub fn jackson_deriv(f: &Expr, var: &str, _ctx: &QContext) -> Expr {
    if !f.contains_var(var) {
        return Expr::num(0.0);
    }
    let shifted = f.substitute(var, &scaled(var));
    simplify(&shifted.sub(f.clone()).div(normalizer(var)))
}

/// `(f(q·x) − q·f(x)) / ((q−1)·x)`, simplified.
pub fn modified_qderiv(f: &Expr, var: &str, _ctx: &QContext) -> Expr {
    let shifted = f.substitute(var, &scaled(var));
    simplify(&shifted.sub(Expr::q().mul(f.clone())).div(normalizer(var)))
}

/// `(f[coord ↦ coord + q·e·step] − f) / step`, simplified.
pub fn directional_qdiff(
    f: &Expr,
    coord: &str,
    direction: &Multivector,
    step_var: &str,
    _ctx: &QContext,
) -> Result<Expr, QDerivError> {
    let k = direction.as_unit_generator().ok_or(QDerivError::NotAGenerator)?;
    directional_by_index(f, coord, k as u8, step_var)
}

pub(crate) fn directional_by_index(
    f: &Expr,
    coord: &str,
    generator: u8,
    step_var: &str,
) -> Result<Expr, QDerivError> {
    if !VarKind::of(step_var).is_spinor() {
        return Err(QDerivError::NotSpinor(step_var.to_string()));
    }
    if !f.contains_var(coord) {
        return Ok(Expr::num(0.0));
    }
    let shift = Expr::var(coord).add(Expr::q().mul(Expr::Gen(generator)).mul(Expr::var(step_var)));
    let shifted = f.substitute(coord, &shift);
    Ok(simplify(&shifted.sub(f.clone()).div(Expr::var(step_var))))
}

/// Default step variables: `x^1` for the first direction, `x_2̇` for the
/// second.
pub fn default_steps() -> (&'static str, &'static str) {
    ("xa1", "xd2")
}

/// Dispatches on `kind`.
pub fn derivative(f: &Expr, var: &str, kind: &QDerivKind, ctx: &QContext) -> Result<Expr, QDerivError> {
    match kind {
        QDerivKind::Jackson => Ok(jackson_deriv(f, var, ctx)),
        QDerivKind::Modified => Ok(modified_qderiv(f, var, ctx)),
        QDerivKind::Directional { generator, step } => directional_by_index(f, var, *generator, step),
    }
}

/// The two factors of the chain rule and their product.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainRule {
    /// `∂^qΨ/∂^q u` (modified), evaluated at `u = u(x)`.
    pub outer: Expr,
    /// `∂_q u/∂_q x` (Jackson).
    pub inner: Expr,
    pub product: Expr,
}

/// Name of the spinor variable `psi` is written in, or `None` for a
/// constant.
pub fn outer_variable(psi: &Expr) -> Result<Option<String>, QDerivError> {
    let vars: Vec<String> = psi.free_vars().into_iter().filter(|v| v != "q").collect();
    match vars.as_slice() {
        [] => Ok(None),
        [v] if VarKind::of(v) == VarKind::SpinorFunction => Ok(Some(v.clone())),
        [v] => Err(QDerivError::OuterNotSpinorFunction(v.clone())),
        [_, w, ..] => Err(QDerivError::OuterNotSpinorFunction(w.clone())),
    }
}

/// `∂^qΨ/∂^q u |_{u=u(x)} · ∂_q u/∂_q x`.
pub fn chain_rule_parts(psi: &Expr, u_of_x: &Expr, var: &str, ctx: &QContext) -> Result<ChainRule, QDerivError> {
    let outer = match outer_variable(psi)? {
        Some(u) => simplify(&modified_qderiv(psi, &u, ctx).substitute(&u, u_of_x)),
        None => modified_qderiv(psi, "u", ctx),
    };
    let inner = jackson_deriv(u_of_x, var, ctx);
    let product = simplify(&outer.clone().mul(inner.clone()));
    Ok(ChainRule { outer, inner, product })
}

pub fn chain_rule(psi: &Expr, u_of_x: &Expr, var: &str, ctx: &QContext) -> Result<Expr, QDerivError> {
    chain_rule_parts(psi, u_of_x, var, ctx).map(|c| c.product)
}

/// Numeric Jackson quotient `(f(q·x) − f(x))/((q−1)·x)` at `var = x`, with
/// `q` taken from `ctx` and the remaining variables from `b`.
pub fn jackson_quotient_at(
    f: &Expr,
    var: &str,
    x: Complex64,
    b: &Binding,
    ctx: &QContext,
) -> Result<Value, QDerivError> {
    let b = ctx.bind(b.clone());
    let q = ctx.q_complex();
    let at = |t: Complex64| eval(f, &b.clone().with(var, t));
    let diff = at(q * x)?.sub(&at(x)?).map_err(EvalError::from)?;
    Ok(diff.div(&Value::Scalar((q - 1.0) * x)).map_err(EvalError::from)?)
}
