//! Composite operators built from q-derivatives: the two-direction operator
//! `D_q = e_ν ∂_μ + e_μ ∂_ν`, the q-Dirac operator `γ_μ ∂_μ`, its spinor
//! form, q-differentials and the covariant q-derivative.
//!
//! Prefactors always multiply from the left. The index `μ` is a parameter
//! and is never summed.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::clifford::{CliffordError, GammaSet, Signature};
use crate::expr::{eval, simplify, Binding, EvalError, Expr, VarKind};
use crate::qderiv::{
    chain_rule, default_steps, directional_by_index, jackson_deriv, modified_qderiv, outer_variable,
    QContext, QDerivError,
};
use crate::value::Value;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OperatorError {
    #[error("directions must differ (both are {0})")]
    SameDirection(u8),
    #[error("generator index {index} outside 1..={n}")]
    GeneratorIndex { index: u8, n: usize },
    #[error("gamma index {0} outside 0..=3")]
    GammaIndex(u8),
    #[error("operator spec does not match the requested operation (expected {0})")]
    WrongKind(&'static str),
    #[error("outer derivative must be jackson or modified")]
    OuterKind,
    #[error(transparent)]
    Clifford(#[from] CliffordError),
    #[error(transparent)]
    Deriv(#[from] QDerivError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OperatorKind {
    NewQ {
        mu: u8,
        nu: u8,
        signature: Signature,
        coord_mu: String,
        coord_nu: String,
        step_mu: String,
        step_nu: String,
    },
    DiracQ {
        mu: u8,
        gamma: GammaSet,
        coord: String,
    },
    CovariantQ {
        mu: u8,
        gamma: GammaSet,
        charge: f64,
        potential: Expr,
        coord: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatorSpec {
    pub kind: OperatorKind,
    pub ctx: QContext,
}

impl OperatorSpec {
    /// `D_q` over generators `e_mu`, `e_nu` (1-based) acting on coordinates
    /// `x_mu`, `x_nu`, with step variables `xa1` and `xd2`.
    pub fn new_q(mu: u8, nu: u8, signature: Signature, ctx: QContext) -> Result<Self, OperatorError> {
        let (step_mu, step_nu) = default_steps();
        Self::new_q_with(mu, nu, signature, ("x_mu", "x_nu"), (step_mu, step_nu), ctx)
    }

    pub fn new_q_with(
        mu: u8,
        nu: u8,
        signature: Signature,
        coords: (&str, &str),
        steps: (&str, &str),
        ctx: QContext,
    ) -> Result<Self, OperatorError> {
        if mu == nu {
            return Err(OperatorError::SameDirection(mu));
        }
        for index in [mu, nu] {
            if index == 0 || usize::from(index) > signature.dim() {
                return Err(OperatorError::GeneratorIndex {
                    index,
                    n: signature.dim(),
                });
            }
        }
        for step in [steps.0, steps.1] {
            if !VarKind::of(step).is_spinor() {
                return Err(QDerivError::NotSpinor(step.to_string()).into());
            }
        }
        Ok(OperatorSpec {
            kind: OperatorKind::NewQ {
                mu,
                nu,
                signature,
                coord_mu: coords.0.into(),
                coord_nu: coords.1.into(),
                step_mu: steps.0.into(),
                step_nu: steps.1.into(),
            },
            ctx,
        })
    }

    /// `γ_mu ∂/∂x` with the coordinate named `coord`.
    pub fn dirac_q(mu: u8, gamma: GammaSet, coord: &str, ctx: QContext) -> Result<Self, OperatorError> {
        check_gamma_index(mu)?;
        Ok(OperatorSpec {
            kind: OperatorKind::DiracQ {
                mu,
                gamma,
                coord: coord.into(),
            },
            ctx,
        })
    }

    pub fn covariant_q(
        mu: u8,
        gamma: GammaSet,
        charge: f64,
        potential: Expr,
        coord: &str,
        ctx: QContext,
    ) -> Result<Self, OperatorError> {
        check_gamma_index(mu)?;
        Ok(OperatorSpec {
            kind: OperatorKind::CovariantQ {
                mu,
                gamma,
                charge,
                potential,
                coord: coord.into(),
            },
            ctx,
        })
    }

    /// Binding carrying this operator's algebra and `q`.
    pub fn binding(&self) -> Binding {
        let b = match &self.kind {
            OperatorKind::NewQ { signature, .. } => Binding::new().with_signature(*signature),
            OperatorKind::DiracQ { gamma, .. } | OperatorKind::CovariantQ { gamma, .. } => {
                Binding::new().with_gamma(gamma.clone())
            }
        };
        self.ctx.bind(b)
    }
}

fn check_gamma_index(mu: u8) -> Result<(), OperatorError> {
    if mu > 3 {
        Err(OperatorError::GammaIndex(mu))
    } else {
        Ok(())
    }
}

/// Input to [`apply_new_q`]: a function of the coordinates, or `Ψ(u)` with
/// `u = u(x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum NewQInput {
    Direct(Expr),
    Composite { psi: Expr, u_of_x: Expr },
}

/// `e_ν·∂ψ/∂x_μ + e_μ·∂ψ/∂x_ν`. Direct inputs use directional
/// derivatives; composite inputs use the chain rule.
pub fn apply_new_q(spec: &OperatorSpec, input: &NewQInput) -> Result<Expr, OperatorError> {
    let OperatorKind::NewQ {
        mu,
        nu,
        coord_mu,
        coord_nu,
        step_mu,
        step_nu,
        ..
    } = &spec.kind
    else {
        return Err(OperatorError::WrongKind("new_q"));
    };
    let (d_mu, d_nu) = match input {
        NewQInput::Direct(f) => (
            directional_by_index(f, coord_mu, *mu, step_mu)?,
            directional_by_index(f, coord_nu, *nu, step_nu)?,
        ),
        NewQInput::Composite { psi, u_of_x } => (
            chain_rule(psi, u_of_x, coord_mu, &spec.ctx)?,
            chain_rule(psi, u_of_x, coord_nu, &spec.ctx)?,
        ),
    };
    Ok(simplify(
        &Expr::Gen(*nu).mul(d_mu).add(Expr::Gen(*mu).mul(d_nu)),
    ))
}

/// `D_q` with Jackson partials in both coordinates.
fn new_q_jackson(spec: &OperatorSpec, f: &Expr) -> Result<Expr, OperatorError> {
    let OperatorKind::NewQ {
        mu,
        nu,
        coord_mu,
        coord_nu,
        ..
    } = &spec.kind
    else {
        return Err(OperatorError::WrongKind("new_q"));
    };
    let d_mu = jackson_deriv(f, coord_mu, &spec.ctx);
    let d_nu = jackson_deriv(f, coord_nu, &spec.ctx);
    Ok(simplify(
        &Expr::Gen(*nu).mul(d_mu).add(Expr::Gen(*mu).mul(d_nu)),
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DqSquaredReport {
    /// `max |D_q²f + ∂²_μ f + ∂²_ν f|` over the sample points.
    pub max_residual: f64,
    pub tol: f64,
    pub samples: usize,
    pub anticommuting: bool,
    pub squares_negative: bool,
    /// Both algebra preconditions hold, so the identity is expected.
    pub expected: bool,
    pub identity_holds: bool,
}

impl DqSquaredReport {
    /// Fails only when the identity is expected and does not hold.
    pub fn passed(&self) -> bool {
        !self.expected || self.identity_holds
    }
}

/// Compares `D_q²f` with `−∂²_μ f − ∂²_ν f`, where `∂²` is the composed
/// Jackson derivative, at `samples` deterministic points in `±[0.25, 1.5]`.
/// The generators come from `algebra` (pass `spec.binding()` for the
/// standard Clifford generators).
pub fn check_dq_squared_in(
    spec: &OperatorSpec,
    f: &Expr,
    samples: usize,
    algebra: &Binding,
) -> Result<DqSquaredReport, OperatorError> {
    let OperatorKind::NewQ {
        mu,
        nu,
        coord_mu,
        coord_nu,
        ..
    } = &spec.kind
    else {
        return Err(OperatorError::WrongKind("new_q"));
    };
    let ctx = &spec.ctx;
    let dq = new_q_jackson(spec, f)?;
    let dq2 = new_q_jackson(spec, &dq)?;
    let jj_mu = jackson_deriv(&jackson_deriv(f, coord_mu, ctx), coord_mu, ctx);
    let jj_nu = jackson_deriv(&jackson_deriv(f, coord_nu, ctx), coord_nu, ctx);
    let residual = simplify(&dq2.add(jj_mu).add(jj_nu));

    let b = ctx.bind(algebra.clone());
    let gen = |k: u8| eval(&Expr::Gen(k), &b);
    let (e_mu, e_nu) = (gen(*mu)?, gen(*nu)?);
    let minus_one = Value::from(-1.0);
    let anti = e_mu.mul(&e_nu).and_then(|a| a.add(&e_nu.mul(&e_mu)?));
    let anticommuting = anti.map(|a| a.max_norm() == 0.0).unwrap_or(false);
    let squares_negative = [&e_mu, &e_nu].iter().all(|e| {
        e.mul(e)
            .and_then(|s| s.sub(&minus_one))
            .map(|d| d.max_norm() == 0.0)
            .unwrap_or(false)
    });

    let mut rng = ChaCha8Rng::seed_from_u64(0xD2);
    let mut draw = || {
        let mag: f64 = rng.gen_range(0.25..1.5);
        if rng.gen_bool(0.5) {
            mag
        } else {
            -mag
        }
    };
    let mut max_residual: f64 = 0.0;
    for _ in 0..samples.max(1) {
        let point = b.clone().with(coord_mu.as_str(), draw()).with(coord_nu.as_str(), draw());
        let r = match eval(&residual, &point) {
            Ok(v) => v.max_norm(),
            Err(EvalError::Value(_)) => f64::INFINITY,
            Err(e) => return Err(e.into()),
        };
        max_residual = max_residual.max(if r.is_nan() { f64::INFINITY } else { r });
    }
    let expected = anticommuting && squares_negative && mu != nu;
    Ok(DqSquaredReport {
        max_residual,
        tol: ctx.tol(),
        samples: samples.max(1),
        anticommuting,
        squares_negative,
        expected,
        identity_holds: max_residual <= ctx.tol(),
    })
}

pub fn check_dq_squared(spec: &OperatorSpec, f: &Expr, samples: usize) -> Result<DqSquaredReport, OperatorError> {
    check_dq_squared_in(spec, f, samples, &spec.binding())
}

/// `γ_μ · ∂f/∂x_μ` (Jackson).
pub fn apply_dirac_q(spec: &OperatorSpec, f: &Expr) -> Result<Expr, OperatorError> {
    let OperatorKind::DiracQ { mu, coord, .. } = &spec.kind else {
        return Err(OperatorError::WrongKind("dirac_q"));
    };
    Ok(simplify(&Expr::Gamma(*mu).mul(jackson_deriv(f, coord, &spec.ctx))))
}

/// Formal q-differential `prefactor · d^q x`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QDifferential {
    pub prefactor: Expr,
    pub base: Expr,
}

impl QDifferential {
    /// `e_k · d^q x`.
    pub fn clifford(k: u8, coord: &str) -> Self {
        QDifferential {
            prefactor: Expr::Gen(k),
            base: Expr::var(differential_name(coord)),
        }
    }

    /// `γ_μ · d^q x`.
    pub fn dirac(mu: u8, coord: &str) -> Self {
        QDifferential {
            prefactor: Expr::Gamma(mu),
            base: Expr::var(differential_name(coord)),
        }
    }

    pub fn to_expr(&self) -> Expr {
        self.prefactor.clone().mul(self.base.clone())
    }
}

/// Name of the formal symbol `d^q <coord>`.
pub fn differential_name(coord: &str) -> String {
    format!("dq_{coord}")
}

/// Which derivative `∂^qΨ/∂^q u` denotes in [`dirac_q_spinor_form`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OuterDerivative {
    Jackson,
    Modified,
}

/// `(∂^qΨ/∂^q u)|_{u(x)} · (∂_q u/∂_q x) · γ_μ · d^q x`.
///
/// With [`OuterDerivative::Jackson`] and `u = x` this is `D^q_μ Ψ · d^q x`.
/// [`OuterDerivative::Modified`] gives the chain-rule quotient used in the
/// composite `Ψ(u(x))` case.
pub fn dirac_q_spinor_form(
    psi: &Expr,
    u_of_x: &Expr,
    spec: &OperatorSpec,
    outer: OuterDerivative,
) -> Result<Expr, OperatorError> {
    let OperatorKind::DiracQ { mu, coord, .. } = &spec.kind else {
        return Err(OperatorError::WrongKind("dirac_q"));
    };
    let ctx = &spec.ctx;
    let outer_expr = match outer_variable(psi)? {
        None => Expr::num(0.0),
        Some(u) => {
            let d = match outer {
                OuterDerivative::Jackson => jackson_deriv(psi, &u, ctx),
                OuterDerivative::Modified => modified_qderiv(psi, &u, ctx),
            };
            d.substitute(&u, u_of_x)
        }
    };
    let inner = jackson_deriv(u_of_x, coord, ctx);
    let dx = QDifferential::dirac(*mu, coord).to_expr();
    Ok(simplify(&outer_expr.mul(inner).mul(dx)))
}

/// `∂f/∂x_μ − e·A·f` (Jackson).
pub fn apply_covariant_q(spec: &OperatorSpec, f: &Expr) -> Result<Expr, OperatorError> {
    let OperatorKind::CovariantQ {
        charge,
        potential,
        coord,
        ..
    } = &spec.kind
    else {
        return Err(OperatorError::WrongKind("covariant_q"));
    };
    let coupling = Expr::Num(Complex64::new(*charge, 0.0))
        .mul(potential.clone())
        .mul(f.clone());
    Ok(simplify(&jackson_deriv(f, coord, &spec.ctx).sub(coupling)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;
    use crate::matrix::CMatrix;

    fn p(s: &str) -> Expr {
        parse(s).unwrap()
    }

    fn new_q() -> OperatorSpec {
        OperatorSpec::new_q(1, 2, Signature::default(), QContext::default()).unwrap()
    }

    fn dirac(mu: u8) -> OperatorSpec {
        OperatorSpec::dirac_q(mu, GammaSet::dirac(), "x", QContext::default()).unwrap()
    }

    #[test]
    fn spec_validation() {
        let s = Signature::default();
        let c = QContext::default();
        assert_eq!(OperatorSpec::new_q(2, 2, s, c), Err(OperatorError::SameDirection(2)));
        assert!(matches!(
            OperatorSpec::new_q(1, 5, s, c),
            Err(OperatorError::GeneratorIndex { index: 5, n: 4 })
        ));
        assert!(OperatorSpec::new_q(0, 1, s, c).is_err());
        assert!(OperatorSpec::new_q_with(1, 2, s, ("a", "b"), ("xa1", "t"), c).is_err());
        assert_eq!(
            OperatorSpec::dirac_q(4, GammaSet::dirac(), "x", c),
            Err(OperatorError::GammaIndex(4))
        );
    }

    #[test]
    fn new_q_of_spinor_monomial() {
        let r = apply_new_q(&new_q(), &NewQInput::Direct(p("q*x_nu*xd2"))).unwrap();
        assert_eq!(r.to_string(), "q^2*e1*e2*xd2");
        let r = apply_new_q(&new_q(), &NewQInput::Direct(p("4"))).unwrap();
        assert_eq!(r, Expr::num(0.0));
    }

    #[test]
    fn new_q_of_composite_exponential() {
        let input = NewQInput::Composite {
            psi: p("exp(i*u)"),
            u_of_x: p("q^2*x_mu"),
        };
        let r = apply_new_q(&new_q(), &input).unwrap();
        let (q, x) = (0.6, 0.9);
        let u = q * q * x;
        let i = Complex64::i();
        let quotient = ((i * q * u).exp() - q * (i * u).exp()) / ((q - 1.0) * u);
        let b = Binding::new().with("q", q).with("x_mu", x);
        let got = eval(&r, &b).unwrap();
        let e2 = eval(&Expr::Gen(2), &b).unwrap();
        let want = e2.scale(quotient * q * q);
        assert!(got.sub(&want).unwrap().max_norm() < 1e-12);
    }

    #[test]
    fn dq_squared_on_small_cases() {
        for f in ["x_mu^2 + x_nu^2", "1", "x_mu*x_nu", "x_mu^3*x_nu^2"] {
            let r = check_dq_squared(&new_q(), &p(f), 10).unwrap();
            assert!(r.expected && r.identity_holds, "{f}: {r:?}");
        }
    }

    #[test]
    fn dq_squared_reports_commuting_algebra() {
        let one = Value::Matrix(CMatrix::identity(2));
        let algebra = Binding::new().with_generators(vec![one.clone(), one]);
        let r = check_dq_squared_in(&new_q(), &p("x_mu*x_nu"), 5, &algebra).unwrap();
        assert!(!r.anticommuting && !r.squares_negative && !r.expected);
        assert!(r.max_residual > 0.0);
        assert!(r.passed());
    }

    #[test]
    fn dirac_operator_cases() {
        let r = apply_dirac_q(&dirac(0), &p("x")).unwrap();
        assert_eq!(r, Expr::Gamma(0));
        let r = apply_dirac_q(&dirac(1), &p("x^2")).unwrap();
        assert_eq!(r.to_string(), "(q+1)*g1*x");
        assert_eq!(apply_dirac_q(&dirac(2), &p("5")).unwrap(), Expr::num(0.0));
        assert!(apply_dirac_q(&new_q(), &p("x")).is_err());
    }

    #[test]
    fn spinor_form_cases() {
        let d = dirac(0);
        let r = dirac_q_spinor_form(&p("u"), &p("x"), &d, OuterDerivative::Jackson).unwrap();
        assert_eq!(r.to_string(), "g0*dq_x");
        let r = dirac_q_spinor_form(&p("3"), &p("x"), &d, OuterDerivative::Jackson).unwrap();
        assert_eq!(r, Expr::num(0.0));
        let r = dirac_q_spinor_form(&p("exp(i*u)"), &p("q^2*x"), &d, OuterDerivative::Modified).unwrap();
        assert!(r.to_string().starts_with("q^2*"), "{r}");
    }

    #[test]
    fn spinor_form_with_identity_matches_dirac_operator() {
        let d = dirac(3);
        let psi = p("u^3 - 2*u");
        let form = dirac_q_spinor_form(&psi, &p("x"), &d, OuterDerivative::Jackson).unwrap();
        let direct = apply_dirac_q(&d, &psi.substitute("u", &p("x"))).unwrap();
        let composed = simplify(&direct.mul(Expr::var("dq_x")));
        assert_eq!(form, composed);
    }

    #[test]
    fn covariant_cases() {
        let c = QContext::default();
        let spec = |e: f64, a: &str| OperatorSpec::covariant_q(0, GammaSet::dirac(), e, p(a), "x", c).unwrap();
        assert_eq!(
            apply_covariant_q(&spec(3.0, "0"), &p("x^2")).unwrap(),
            jackson_deriv(&p("x^2"), "x", &c)
        );
        assert_eq!(apply_covariant_q(&spec(1.0, "a"), &p("1")).unwrap().to_string(), "-a");
        let r = apply_covariant_q(&spec(2.0, "1"), &p("x")).unwrap();
        let v = eval(&r, &Binding::new().with("x", 3.0)).unwrap();
        assert_eq!(v, Value::from(-5.0));
    }

    #[test]
    fn scalars_commute_with_algebra_constants() {
        for s in ["q^2*x_mu", "(x+1)/(x-1)", "exp(i*u)"] {
            for c in [Expr::Gen(1), Expr::Gamma(2)] {
                let e = c.clone().mul(p(s)).sub(p(s).mul(c));
                assert_eq!(simplify(&e), Expr::num(0.0), "{s}");
            }
        }
    }
}
