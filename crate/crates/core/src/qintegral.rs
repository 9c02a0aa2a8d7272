//! Neumann series, Jackson contour sums and audits of the q-spinor integral
//! formula.
//!
//! The contour `Γ_q` is realized as the lattice `{x₀·q^k : k = 0..K}` and
//! `∮ f d^q x` as the truncated Jackson sum
//!
//! ```text
//! (1 − q) · Σ_{k=0}^{K} q^k·x₀ · f(q^k·x₀)
//! ```
//!
//! The series side of the integral formula is the computable object. Its
//! equality with the contour side is only audited, never assumed.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::clifford::{CliffordError, GammaSet, Multivector, Representation, Signature};
use crate::expr::{eval, Binding, EvalError, Expr, VarKind};
use crate::matrix::{spectral_radius, CMatrix, MatrixError};
use crate::qderiv::{outer_variable, QContext, QDerivError};
use crate::value::{Value, ValueError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IntegralError {
    #[error("b must be nonzero")]
    ZeroB,
    #[error("contour depth must be at least 1")]
    EmptyContour,
    #[error("empty matrix")]
    EmptyMatrix,
    #[error("prefactor has no metric dual: its square is not ±I")]
    NoMetricDual,
    #[error("evaluation failed at x = {x}: {source}")]
    EvalAt { x: Complex64, source: EvalError },
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Value(#[from] ValueError),
    #[error(transparent)]
    Matrix(#[from] MatrixError),
    #[error(transparent)]
    Clifford(#[from] CliffordError),
    #[error(transparent)]
    Deriv(#[from] QDerivError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeumannResult {
    pub value: CMatrix,
    pub terms_used: usize,
    pub rho: f64,
    pub converged: bool,
    /// `(I − M)⁻¹` when it exists.
    pub closed_form: Option<CMatrix>,
}

/// Term size at which a divergent partial sum is cut off.
pub const DIVERGENCE_CAP: f64 = 1e100;

/// Maximum absolute column sum.
fn one_norm(m: &CMatrix) -> f64 {
    crate::matrix::nan_max(
        (0..m.dim()).map(|j| (0..m.dim()).map(|i| m.get(i, j).norm()).sum::<f64>()),
    )
}

/// Partial sums of `Σ Mⁿ`, summed left to right.
///
/// When `ρ(M) < 1`, summation stops once the next term `T` satisfies
/// `‖T‖_max · ‖(I−M)⁻¹‖_1 < tol`. The tail equals `T·(I−M)⁻¹`, so a
/// converged value lies within `tol` of the closed form entrywise. When
/// `ρ(M) ≥ 1` the series is summed to `max_terms`, or until a term exceeds
/// [`DIVERGENCE_CAP`], and flagged as divergent. The partial sum stays finite.
pub fn neumann_series(m: &CMatrix, ctx: &QContext) -> Result<NeumannResult, IntegralError> {
    let n = m.dim();
    if n == 0 {
        return Err(IntegralError::EmptyMatrix);
    }
    let rho = spectral_radius(m);
    let identity = CMatrix::identity(n);
    let closed_form = identity.sub(m)?.inverse().ok();
    let tail_factor = match (&closed_form, rho < 1.0) {
        (Some(c), true) => Some(one_norm(c)),
        _ => None,
    };

    let mut value = identity.clone();
    let mut term = identity;
    let mut terms_used = 1;
    let mut converged = false;
    while terms_used < ctx.max_terms() {
        term = term.mul(m)?;
        let size = term.max_norm();
        if let Some(factor) = tail_factor {
            if size * factor < ctx.tol() {
                converged = true;
                break;
            }
        }
        if !(size <= DIVERGENCE_CAP) {
            break;
        }
        value = value.add(&term)?;
        terms_used += 1;
    }
    if !converged && terms_used >= ctx.max_terms() {
        if let Some(factor) = tail_factor {
            converged = term.mul(m)?.max_norm() * factor < ctx.tol();
        }
    }
    Ok(NeumannResult {
        value,
        terms_used,
        rho,
        converged,
        closed_form,
    })
}

/// Truncated q-geometric lattice `{x₀·q^k : k = 0..=depth}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QContour {
    base: Complex64,
    depth: usize,
}

impl QContour {
    pub fn new(base: Complex64, depth: usize) -> Result<Self, IntegralError> {
        if depth == 0 {
            return Err(IntegralError::EmptyContour);
        }
        Ok(QContour { base, depth })
    }

    pub fn base(&self) -> Complex64 {
        self.base
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn points(&self, q: f64) -> Vec<Complex64> {
        let mut out = Vec::with_capacity(self.depth + 1);
        let mut x = self.base;
        for _ in 0..=self.depth {
            out.push(x);
            x *= q;
        }
        out
    }
}

/// Binds every free variable of `e` other than `q` and those already bound
/// in `b` to `x`.
fn bind_coordinates(e: &Expr, b: &Binding, x: Complex64) -> Binding {
    let mut out = b.clone();
    for v in e.free_vars() {
        if v != "q" && b.get(&v).is_none() {
            out.set(v, x);
        }
    }
    out
}

/// `Ψ(u(x))` as a single expression. A `psi` without spinor-function
/// variables is taken to be a function of the coordinates already.
pub fn compose(psi: &Expr, u_of_x: &Expr) -> Result<Expr, IntegralError> {
    let through_u = psi
        .free_vars()
        .iter()
        .any(|v| VarKind::of(v) == VarKind::SpinorFunction);
    if !through_u {
        return Ok(psi.clone());
    }
    Ok(match outer_variable(psi)? {
        Some(u) => psi.substitute(&u, u_of_x),
        None => psi.clone(),
    })
}

/// Evaluates `e` with `q` from `ctx` and every unbound coordinate set to
/// `x`.
pub fn eval_at(e: &Expr, x: Complex64, b: &Binding, ctx: &QContext) -> Result<Value, IntegralError> {
    let b = ctx.bind(b.clone());
    eval(e, &bind_coordinates(e, &b, x)).map_err(|source| IntegralError::EvalAt { x, source })
}

/// `(1 − q) · Σ_{k=0}^{K} q^k·x₀ · f(q^k·x₀)`.
pub fn jackson_contour_integral_in(
    f: &Expr,
    var: &str,
    contour: &QContour,
    ctx: &QContext,
    b: &Binding,
) -> Result<Value, IntegralError> {
    let q = ctx.q();
    let b = ctx.bind(b.clone());
    let mut acc = Value::zero();
    for x in contour.points(q) {
        let fx = eval(f, &b.clone().with(var, x)).map_err(|source| IntegralError::EvalAt { x, source })?;
        acc = acc.add(&fx.scale(x * (1.0 - q)))?;
    }
    Ok(acc)
}

pub fn jackson_contour_integral(
    f: &Expr,
    var: &str,
    contour: &QContour,
    ctx: &QContext,
) -> Result<Value, IntegralError> {
    jackson_contour_integral_in(f, var, contour, ctx, &Binding::new())
}

/// Left factor of the bracketed series term: a gamma matrix, a Clifford
/// generator in its matrix representation, or an arbitrary matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Prefactor {
    Gamma { set: GammaSet, mu: u8 },
    Generator { signature: Signature, k: u8 },
    Matrix { matrix: CMatrix },
}

impl Prefactor {
    pub fn lower(&self) -> Result<CMatrix, IntegralError> {
        Ok(match self {
            Prefactor::Gamma { set, mu } => set.gamma(usize::from(*mu))?.clone(),
            Prefactor::Generator { signature, k } => Multivector::generator(*signature, usize::from(*k))?.to_matrix()?,
            Prefactor::Matrix { matrix } => matrix.clone(),
        })
    }

    /// Metric dual `E^μ = s·E_μ` where `E_μ² = s·I`, `s = ±1`.
    pub fn upper(&self) -> Result<CMatrix, IntegralError> {
        let e = self.lower()?;
        let sq = e.mul(&e)?;
        for s in [1.0, -1.0] {
            let target = CMatrix::scalar(e.dim(), Complex64::new(s, 0.0));
            if sq.max_diff(&target)? == 0.0 {
                return Ok(e.scale(Complex64::new(s, 0.0)));
            }
        }
        Err(IntegralError::NoMetricDual)
    }

    pub fn dim(&self) -> usize {
        match self {
            Prefactor::Gamma { .. } => 4,
            Prefactor::Generator { signature, .. } => Representation::new(*signature).dim(),
            Prefactor::Matrix { matrix } => matrix.dim(),
        }
    }

    /// Binding whose `e_k` and `g_μ` resolve in this prefactor's algebra.
    pub fn binding(&self) -> Binding {
        match self {
            Prefactor::Gamma { set, .. } => Binding::new().with_gamma(set.clone()),
            Prefactor::Generator { signature, .. } => {
                let rep = Representation::new(*signature);
                let gens = (1..=signature.dim())
                    .map(|k| Value::Matrix(rep.generator(k).expect("index in range").clone()))
                    .collect();
                Binding::new().with_signature(*signature).with_generators(gens)
            }
            Prefactor::Matrix { .. } => Binding::new(),
        }
    }
}

/// Series side of the integral formula and its Neumann metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FormulaRhs {
    pub value: CMatrix,
    pub series: NeumannResult,
}

/// `(1/(q·b)) · Σ_{n≥0} [E·Ψ(u(x₀))]ⁿ`.
pub fn formula_rhs_with(
    psi: &Expr,
    u_of_x: &Expr,
    prefactor: &Prefactor,
    x0: Complex64,
    b: f64,
    ctx: &QContext,
) -> Result<FormulaRhs, IntegralError> {
    if b == 0.0 {
        return Err(IntegralError::ZeroB);
    }
    let e = prefactor.lower()?;
    let composed = compose(psi, u_of_x)?;
    let psi0 = eval_at(&composed, x0, &prefactor.binding(), ctx)?.to_matrix(e.dim())?;
    let series = neumann_series(&e.mul(&psi0)?, ctx)?;
    let value = series
        .value
        .scale(Complex64::new(1.0 / ctx.q(), 0.0))
        .scale(Complex64::new(1.0 / b, 0.0));
    Ok(FormulaRhs { value, series })
}

/// `(1/(q·b)) · Σ_{n≥0} [γ_μ·Ψ(u(x₀))]ⁿ`.
pub fn integral_formula_rhs(
    psi: &Expr,
    u_of_x: &Expr,
    gamma: &GammaSet,
    mu: u8,
    x0: Complex64,
    b: f64,
    ctx: &QContext,
) -> Result<FormulaRhs, IntegralError> {
    let prefactor = Prefactor::Gamma {
        set: gamma.clone(),
        mu,
    };
    formula_rhs_with(psi, u_of_x, &prefactor, x0, b, ctx)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AuditVariant {
    /// `∮ Ψ d^q x` against `(1/(qb)) Σ[γ_μ Ψ(x₀)]ⁿ`.
    Dirac,
    /// `∮ Ψ e_μ d^q x` against `(e^μ/(qb)) Σ[e_μ Ψ(x₀)]ⁿ`.
    Clifford,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContourInfo {
    pub base: Complex64,
    pub depth: usize,
    pub q: f64,
    /// The lattice is open; the closed contour is not constructed.
    pub closed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub variant: AuditVariant,
    pub lhs: CMatrix,
    pub rhs: CMatrix,
    pub abs_discrepancy: f64,
    /// `abs_discrepancy / max(‖rhs‖_max, tiny)`.
    pub rel_discrepancy: f64,
    pub converged: bool,
    pub rho: f64,
    pub terms_used: usize,
    pub finite: bool,
    pub b: f64,
    pub contour: ContourInfo,
}

fn audit(
    variant: AuditVariant,
    lhs: CMatrix,
    rhs: FormulaRhs,
    contour: &QContour,
    b: f64,
    ctx: &QContext,
) -> Result<AuditReport, IntegralError> {
    let abs = lhs.max_diff(&rhs.value)?;
    let scale = rhs.value.max_norm().max(f64::MIN_POSITIVE);
    Ok(AuditReport {
        variant,
        finite: lhs.is_finite() && rhs.value.is_finite() && abs.is_finite(),
        rel_discrepancy: abs / scale,
        abs_discrepancy: abs,
        converged: rhs.series.converged,
        rho: rhs.series.rho,
        terms_used: rhs.series.terms_used,
        lhs,
        rhs: rhs.value,
        b,
        contour: ContourInfo {
            base: contour.base(),
            depth: contour.depth(),
            q: ctx.q(),
            closed: false,
        },
    })
}

/// Computes both sides of the integral formula for `Ψ(u(x))` on the
/// lattice of `contour` and reports their difference.
pub fn audit_integral_identity(
    psi: &Expr,
    u_of_x: &Expr,
    gamma: &GammaSet,
    mu: u8,
    contour: &QContour,
    b: f64,
    ctx: &QContext,
) -> Result<AuditReport, IntegralError> {
    let rhs = integral_formula_rhs(psi, u_of_x, gamma, mu, contour.base(), b, ctx)?;
    let lhs = contour_side(psi, u_of_x, contour, ctx, &Binding::new().with_gamma(gamma.clone()))?.to_matrix(4)?;
    audit(AuditVariant::Dirac, lhs, rhs, contour, b, ctx)
}

/// Clifford variant: generator `e_k` of `signature` in its matrix
/// representation, with `e^k` the metric dual.
pub fn audit_clifford_identity(
    psi: &Expr,
    u_of_x: &Expr,
    signature: Signature,
    k: u8,
    contour: &QContour,
    b: f64,
    ctx: &QContext,
) -> Result<AuditReport, IntegralError> {
    let prefactor = Prefactor::Generator { signature, k };
    let mut rhs = formula_rhs_with(psi, u_of_x, &prefactor, contour.base(), b, ctx)?;
    rhs.value = prefactor.upper()?.mul(&rhs.value)?;
    let e = prefactor.lower()?;
    let integral = contour_side(psi, u_of_x, contour, ctx, &prefactor.binding())?;
    let lhs = integral.to_matrix(e.dim())?.mul(&e)?;
    audit(AuditVariant::Clifford, lhs, rhs, contour, b, ctx)
}

fn contour_side(
    psi: &Expr,
    u_of_x: &Expr,
    contour: &QContour,
    ctx: &QContext,
    b: &Binding,
) -> Result<Value, IntegralError> {
    const VAR: &str = "__contour_x";
    let composed = compose(psi, u_of_x)?;
    let mut integrand = composed.clone();
    for v in composed.free_vars() {
        if v != "q" && b.get(&v).is_none() {
            integrand = integrand.substitute(&v, &Expr::var(VAR));
        }
    }
    jackson_contour_integral_in(&integrand, VAR, contour, ctx, b)
}
