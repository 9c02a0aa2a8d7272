//! Series solutions of the q-spinor differential equations and an
//! independent residual audit.
//!
//! Every equation has a prefactor `E` (a gamma matrix, a Clifford generator
//! in matrix form, or any matrix) and is solved pointwise in `x`:
//!
//! | kind                  | equation                          | solution                                      |
//! |-----------------------|-----------------------------------|-----------------------------------------------|
//! | `Inhomogeneous`       | `E·∂ψ − bφ = 0`                   | `ψ = (1/q) N(Eφ)`                             |
//! | `NewOpInhomogeneous`  | `E·∂ψ − aφ = 0`                   | `ψ = (1/q) N(Eφ)`                             |
//! | `Homogeneous`         | `E·∂ψ − bψ = 0`                   | fixed point of `(1/(qb)) N(Eψ)`               |
//! | `Electromagnetic`     | `E·∂Ψ − eE^μAΨ − mg = 0`          | fixed point of `(1/q)N(Eg) − (e/(qm))N(EAΨ)`  |
//! | `DiracEm`             | `E^μ·∂Ψ − eE^μAΨ − mΨ = 0`        | fixed point of `(1/q)N(EΨ) − (e/(qm))N(EAΨ)`  |
//! | `PotentialB`          | `aE·∂ψ + bE·Bφ = 0`               | `ψ = −(1/(aq)) E^μ N(EBφ)`                    |
//!
//! `N(M) = Σ Mⁿ`, `∂` is the Jackson derivative and `E^μ` the metric dual.
//! The series are the closed forms as published; the residual, computed
//! from numeric Jackson quotients on `{x, qx}`, is what says whether they
//! solve the equation.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::Expr;
use crate::matrix::{CMatrix, MatrixError};
use crate::qderiv::QContext;
use crate::qintegral::{compose, eval_at, neumann_series, IntegralError, NeumannResult, Prefactor};
use crate::value::ValueError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolveError {
    #[error("coefficient {name} must be nonzero")]
    ZeroCoefficient { name: &'static str },
    #[error("damping must lie in (0, 1], got {0}")]
    Damping(f64),
    #[error("seed is {got}x{got}, prefactor needs {want}x{want}")]
    SeedShape { got: usize, want: usize },
    #[error("equation is {got}, expected {want}")]
    WrongKind { got: &'static str, want: &'static str },
    #[error("no lattice point x has its shift q·x in the candidate")]
    NoShiftedPoints,
    #[error(transparent)]
    Integral(#[from] IntegralError),
    #[error(transparent)]
    Matrix(#[from] MatrixError),
    #[error(transparent)]
    Value(#[from] ValueError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EquationKind {
    Homogeneous { b: f64 },
    Inhomogeneous { b: f64, phi: Expr },
    NewOpInhomogeneous { a: f64, phi: Expr },
    Electromagnetic { e: f64, m: f64, potential: Expr, g: Expr },
    DiracEm { e: f64, m: f64, potential: Expr },
    PotentialB { a: f64, b: f64, potential: Expr, phi: Expr },
}

impl EquationKind {
    pub fn name(&self) -> &'static str {
        match self {
            EquationKind::Homogeneous { .. } => "homogeneous",
            EquationKind::Inhomogeneous { .. } => "inhomogeneous",
            EquationKind::NewOpInhomogeneous { .. } => "new_op_inhomogeneous",
            EquationKind::Electromagnetic { .. } => "electromagnetic",
            EquationKind::DiracEm { .. } => "dirac_em",
            EquationKind::PotentialB { .. } => "potential_b",
        }
    }

    fn validate(&self) -> Result<(), SolveError> {
        let zero = |name| Err(SolveError::ZeroCoefficient { name });
        match self {
            EquationKind::Homogeneous { b } | EquationKind::Inhomogeneous { b, .. } if *b == 0.0 => zero("b"),
            EquationKind::Electromagnetic { m, .. } | EquationKind::DiracEm { m, .. } if *m == 0.0 => zero("m"),
            EquationKind::PotentialB { a, .. } if *a == 0.0 => zero("a"),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QSpinorEquation {
    pub kind: EquationKind,
    pub prefactor: Prefactor,
    /// Inner function `u(x)`; fields written in `u` are composed with it.
    pub u_of_x: Expr,
    pub ctx: QContext,
    /// Starting point of fixed-point iterations (zero by default).
    pub seed: Option<CMatrix>,
    pub damping: f64,
    pub max_iterations: usize,
}

impl QSpinorEquation {
    pub fn new(kind: EquationKind, prefactor: Prefactor, ctx: QContext) -> Result<Self, SolveError> {
        kind.validate()?;
        prefactor.lower()?;
        Ok(QSpinorEquation {
            kind,
            prefactor,
            u_of_x: Expr::var("x"),
            ctx,
            seed: None,
            damping: 0.5,
            max_iterations: 500,
        })
    }

    pub fn with_u(mut self, u_of_x: Expr) -> Self {
        self.u_of_x = u_of_x;
        self
    }

    pub fn with_seed(mut self, seed: CMatrix) -> Result<Self, SolveError> {
        let want = self.prefactor.dim();
        if seed.dim() != want {
            return Err(SolveError::SeedShape { got: seed.dim(), want });
        }
        self.seed = Some(seed);
        Ok(self)
    }

    pub fn with_damping(mut self, damping: f64) -> Result<Self, SolveError> {
        if !(damping > 0.0 && damping <= 1.0) {
            return Err(SolveError::Damping(damping));
        }
        self.damping = damping;
        Ok(self)
    }

    pub fn with_max_iterations(mut self, n: usize) -> Self {
        self.max_iterations = n.max(1);
        self
    }

    fn dim(&self) -> usize {
        self.prefactor.dim()
    }

    fn field(&self, f: &Expr, x: Complex64) -> Result<CMatrix, SolveError> {
        let composed = compose(f, &self.u_of_x)?;
        Ok(eval_at(&composed, x, &self.prefactor.binding(), &self.ctx)?.to_matrix(self.dim())?)
    }

    fn inv_q(&self) -> Complex64 {
        Complex64::new(1.0 / self.ctx.q(), 0.0)
    }
}

/// Result at one point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointSolution {
    pub x: Complex64,
    /// Last iterate or series value, kept even when not converged.
    pub value: CMatrix,
    /// Series evaluated for the reported value, in formula order.
    pub series: Vec<NeumannResult>,
    /// Fixed-point iterations used, for implicit equations.
    pub iterations: Option<usize>,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub equation: String,
    pub points: Vec<PointSolution>,
    /// Values at the requested points, present iff every point converged.
    pub solution: Option<Vec<CMatrix>>,
    /// Max over requested points of `‖LHS‖_max`, with `ψ(qx)` solved for
    /// the same equation. `None` if it could not be formed.
    pub residual: Option<f64>,
    pub residual_note: Option<String>,
    pub converged_everywhere: bool,
}

struct Evaluated {
    value: CMatrix,
    series: Vec<NeumannResult>,
}

impl Evaluated {
    fn converged(&self) -> bool {
        self.series.iter().all(|s| s.converged)
    }
}

/// `factor·N(E·m)`. The series tolerance is divided by `|factor|` so that
/// `tol` bounds the scaled value.
fn scaled_series(eq: &QSpinorEquation, e: &CMatrix, m: &CMatrix, factor: Complex64) -> Result<(CMatrix, NeumannResult), SolveError> {
    let ctx = if factor.norm() > 1.0 {
        eq.ctx.with_tol(eq.ctx.tol() / factor.norm()).unwrap_or(eq.ctx)
    } else {
        eq.ctx
    };
    let s = neumann_series(&e.mul(m)?, &ctx)?;
    Ok((s.value.scale(factor), s))
}

/// Right-hand map `F` whose fixed point (or value) is the solution.
fn formula(eq: &QSpinorEquation, x: Complex64, psi: &CMatrix) -> Result<Evaluated, SolveError> {
    let e = eq.prefactor.lower()?;
    let q = eq.ctx.q();
    let inv_q = eq.inv_q();
    Ok(match &eq.kind {
        EquationKind::Inhomogeneous { phi, .. } | EquationKind::NewOpInhomogeneous { phi, .. } => {
            let (v, s) = scaled_series(eq, &e, &eq.field(phi, x)?, inv_q)?;
            Evaluated { value: v, series: vec![s] }
        }
        EquationKind::Homogeneous { b } => {
            let (v, s) = scaled_series(eq, &e, psi, Complex64::new(1.0 / (q * b), 0.0))?;
            Evaluated { value: v, series: vec![s] }
        }
        EquationKind::Electromagnetic { e: charge, m, potential, g } => {
            let (source, s1) = scaled_series(eq, &e, &eq.field(g, x)?, inv_q)?;
            if *charge == 0.0 {
                return Ok(Evaluated { value: source, series: vec![s1] });
            }
            let a = eq.field(potential, x)?;
            let (coupling, s2) = scaled_series(eq, &e, &a.mul(psi)?, Complex64::new(charge / (q * m), 0.0))?;
            Evaluated {
                value: source.sub(&coupling)?,
                series: vec![s1, s2],
            }
        }
        EquationKind::DiracEm { e: charge, m, potential } => {
            let (source, s1) = scaled_series(eq, &e, psi, inv_q)?;
            if *charge == 0.0 {
                return Ok(Evaluated { value: source, series: vec![s1] });
            }
            let a = eq.field(potential, x)?;
            let (coupling, s2) = scaled_series(eq, &e, &a.mul(psi)?, Complex64::new(charge / (q * m), 0.0))?;
            Evaluated {
                value: source.sub(&coupling)?,
                series: vec![s1, s2],
            }
        }
        EquationKind::PotentialB { a, potential, phi, .. } => {
            let bphi = eq.field(potential, x)?.mul(&eq.field(phi, x)?)?;
            let (sum, s) = scaled_series(eq, &e, &bphi, Complex64::new(-1.0 / (a * q), 0.0))?;
            Evaluated {
                value: eq.prefactor.upper()?.mul(&sum)?,
                series: vec![s],
            }
        }
    })
}

fn is_implicit(eq: &QSpinorEquation) -> bool {
    match &eq.kind {
        EquationKind::Homogeneous { .. } | EquationKind::DiracEm { .. } => true,
        EquationKind::Electromagnetic { e, .. } => *e != 0.0,
        _ => false,
    }
}

/// Damped iteration `Ψ ← (1−λ)Ψ + λF(Ψ)`, stopping when successive iterates
/// differ by less than `tol` or a series diverges.
fn solve_point(eq: &QSpinorEquation, x: Complex64) -> Result<PointSolution, SolveError> {
    let zero = CMatrix::zeros(eq.dim());
    if !is_implicit(eq) {
        let r = formula(eq, x, &zero)?;
        return Ok(PointSolution {
            x,
            converged: r.converged(),
            value: r.value,
            series: r.series,
            iterations: None,
        });
    }
    let lambda = Complex64::new(eq.damping, 0.0);
    let keep = Complex64::new(1.0 - eq.damping, 0.0);
    let mut psi = eq.seed.clone().unwrap_or(zero);
    let mut series = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    while iterations < eq.max_iterations {
        iterations += 1;
        let r = formula(eq, x, &psi)?;
        let series_ok = r.converged();
        series = r.series;
        if !series_ok {
            break;
        }
        let next = psi.scale(keep).add(&r.value.scale(lambda))?;
        let step = next.max_diff(&psi)?;
        psi = next;
        if !step.is_finite() {
            break;
        }
        if step < eq.ctx.tol() {
            converged = true;
            break;
        }
    }
    Ok(PointSolution {
        x,
        value: psi,
        series,
        iterations: Some(iterations),
        converged,
    })
}

/// Solves at each requested point, and at its shift `q·x` for the
/// residual.
pub fn solve(eq: &QSpinorEquation, points: &[Complex64]) -> Result<SolveReport, SolveError> {
    let solved = points
        .iter()
        .map(|&x| solve_point(eq, x))
        .collect::<Result<Vec<_>, _>>()?;
    let converged_everywhere = solved.iter().all(|p| p.converged);
    let solution = converged_everywhere.then(|| solved.iter().map(|p| p.value.clone()).collect());

    let q = eq.ctx.q();
    let mut lattice: Vec<(Complex64, CMatrix)> = solved.iter().map(|p| (p.x, p.value.clone())).collect();
    for p in &solved {
        if p.x != Complex64::new(0.0, 0.0) {
            lattice.push((p.x * q, solve_point(eq, p.x * q)?.value));
        }
    }
    let (residual, residual_note) = match residual_at(eq, &lattice, points) {
        Ok(r) if r.is_finite() => (Some(r), None),
        Ok(r) => (None, Some(format!("residual is not finite ({r})"))),
        Err(e) => (None, Some(e.to_string())),
    };
    Ok(SolveReport {
        equation: eq.kind.name().to_string(),
        points: solved,
        solution,
        residual,
        residual_note,
        converged_everywhere,
    })
}

fn expect_kind(eq: &QSpinorEquation, want: &'static str) -> Result<(), SolveError> {
    let got = eq.kind.name();
    if got == want {
        Ok(())
    } else {
        Err(SolveError::WrongKind { got, want })
    }
}

pub fn solve_inhomogeneous(eq: &QSpinorEquation, points: &[Complex64]) -> Result<SolveReport, SolveError> {
    expect_kind(eq, "inhomogeneous")?;
    solve(eq, points)
}

pub fn solve_new_op_inhomogeneous(eq: &QSpinorEquation, points: &[Complex64]) -> Result<SolveReport, SolveError> {
    expect_kind(eq, "new_op_inhomogeneous")?;
    solve(eq, points)
}

pub fn solve_homogeneous(eq: &QSpinorEquation, points: &[Complex64]) -> Result<SolveReport, SolveError> {
    expect_kind(eq, "homogeneous")?;
    solve(eq, points)
}

pub fn solve_electromagnetic(eq: &QSpinorEquation, points: &[Complex64]) -> Result<SolveReport, SolveError> {
    expect_kind(eq, "electromagnetic")?;
    solve(eq, points)
}

pub fn solve_dirac_em(eq: &QSpinorEquation, points: &[Complex64]) -> Result<SolveReport, SolveError> {
    expect_kind(eq, "dirac_em")?;
    solve(eq, points)
}

pub fn solve_potential_b(eq: &QSpinorEquation, points: &[Complex64]) -> Result<SolveReport, SolveError> {
    expect_kind(eq, "potential_b")?;
    solve(eq, points)
}

/// One application of the map whose fixed point the implicit solvers seek.
pub fn fixed_point_map(eq: &QSpinorEquation, x: Complex64, psi: &CMatrix) -> Result<CMatrix, SolveError> {
    Ok(formula(eq, x, psi)?.value)
}

/// Left-hand side of the equation at `x`, given `ψ(x)` and `ψ(qx)`.
pub fn lhs_at(eq: &QSpinorEquation, x: Complex64, psi_x: &CMatrix, psi_qx: &CMatrix) -> Result<CMatrix, SolveError> {
    let q = eq.ctx.q();
    let e = eq.prefactor.lower()?;
    let c = |v: f64| Complex64::new(v, 0.0);
    let denom = (q - 1.0) * x;
    if denom.norm() < crate::value::MIN_DIVISOR {
        return Err(ValueError::DivisionByZero(denom.norm()).into());
    }
    let jackson = psi_qx.sub(psi_x)?.scale(denom.inv());
    Ok(match &eq.kind {
        EquationKind::Homogeneous { b } => e.mul(&jackson)?.sub(&psi_x.scale(c(*b)))?,
        EquationKind::Inhomogeneous { b, phi } => e.mul(&jackson)?.sub(&eq.field(phi, x)?.scale(c(*b)))?,
        EquationKind::NewOpInhomogeneous { a, phi } => e.mul(&jackson)?.sub(&eq.field(phi, x)?.scale(c(*a)))?,
        EquationKind::Electromagnetic { e: charge, m, potential, g } => {
            let coupling = eq.prefactor.upper()?.mul(&eq.field(potential, x)?)?.mul(psi_x)?;
            e.mul(&jackson)?
                .sub(&coupling.scale(c(*charge)))?
                .sub(&eq.field(g, x)?.scale(c(*m)))?
        }
        EquationKind::DiracEm { e: charge, m, potential } => {
            let upper = eq.prefactor.upper()?;
            let coupling = upper.mul(&eq.field(potential, x)?)?.mul(psi_x)?;
            upper
                .mul(&jackson)?
                .sub(&coupling.scale(c(*charge)))?
                .sub(&psi_x.scale(c(*m)))?
        }
        EquationKind::PotentialB { a, b, potential, phi } => {
            let source = e.mul(&eq.field(potential, x)?)?.mul(&eq.field(phi, x)?)?;
            e.mul(&jackson)?.scale(c(*a)).add(&source.scale(c(*b)))?
        }
    })
}

fn lookup(lattice: &[(Complex64, CMatrix)], x: Complex64) -> Option<&CMatrix> {
    lattice
        .iter()
        .find(|(t, _)| (t - x).norm() <= 1e-12 * x.norm().max(1e-300))
        .map(|(_, v)| v)
}

fn residual_at(
    eq: &QSpinorEquation,
    lattice: &[(Complex64, CMatrix)],
    points: &[Complex64],
) -> Result<f64, SolveError> {
    let q = eq.ctx.q();
    let mut worst: Option<f64> = None;
    for &x in points {
        if x == Complex64::new(0.0, 0.0) {
            continue;
        }
        let (Some(psi_x), Some(psi_qx)) = (lookup(lattice, x), lookup(lattice, x * q)) else {
            continue;
        };
        let r = lhs_at(eq, x, psi_x, psi_qx)?.max_norm();
        worst = Some(worst.map_or(r, |w| w.max(r)));
    }
    worst.ok_or(SolveError::NoShiftedPoints)
}

/// Max over candidate points `x` whose shift `q·x` is also present of
/// `‖LHS‖_max`, with the derivative taken as the Jackson quotient
/// `(ψ(qx) − ψ(x))/((q−1)x)`.
pub fn residual(eq: &QSpinorEquation, candidate: &[(Complex64, CMatrix)]) -> Result<f64, SolveError> {
    let xs: Vec<Complex64> = candidate.iter().map(|(x, _)| *x).collect();
    residual_at(eq, candidate, &xs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clifford::{GammaSet, Signature};
    use crate::expr::parse;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn p(s: &str) -> Expr {
        parse(s).unwrap()
    }

    fn gamma0() -> Prefactor {
        Prefactor::Gamma {
            set: GammaSet::dirac(),
            mu: 0,
        }
    }

    fn unit() -> Prefactor {
        Prefactor::Matrix {
            matrix: CMatrix::identity(1),
        }
    }

    fn ctx(q: f64) -> QContext {
        QContext::new(q).unwrap()
    }

    fn inhomogeneous(phi: &str, pre: Prefactor, q: f64) -> QSpinorEquation {
        QSpinorEquation::new(EquationKind::Inhomogeneous { b: 1.0, phi: p(phi) }, pre, ctx(q)).unwrap()
    }

    #[test]
    fn coefficient_validation() {
        let zero_b = EquationKind::Inhomogeneous { b: 0.0, phi: p("1") };
        assert_eq!(
            QSpinorEquation::new(zero_b, gamma0(), ctx(0.5)),
            Err(SolveError::ZeroCoefficient { name: "b" })
        );
        let zero_m = EquationKind::DiracEm {
            e: 1.0,
            m: 0.0,
            potential: p("0"),
        };
        assert!(QSpinorEquation::new(zero_m, gamma0(), ctx(0.5)).is_err());
        let zero_a = EquationKind::PotentialB {
            a: 0.0,
            b: 1.0,
            potential: p("1"),
            phi: p("1"),
        };
        assert!(QSpinorEquation::new(zero_a, gamma0(), ctx(0.5)).is_err());
        assert!(QSpinorEquation::new(EquationKind::Homogeneous { b: 0.0 }, gamma0(), ctx(0.5)).is_err());
    }

    #[test]
    fn inhomogeneous_zero_source() {
        let eq = inhomogeneous("0", gamma0(), 0.5);
        let r = solve_inhomogeneous(&eq, &[c(1.0), c(2.0)]).unwrap();
        assert!(r.converged_everywhere);
        for v in r.solution.unwrap() {
            assert_eq!(v, CMatrix::scalar(4, c(2.0)));
        }
        assert!(r.residual.is_some());
    }

    #[test]
    fn inhomogeneous_constant_source() {
        let eq = inhomogeneous("0.3", gamma0(), 0.5);
        let r = solve(&eq, &[c(1.0)]).unwrap();
        let g0 = GammaSet::dirac().gamma(0).unwrap().clone();
        let oracle = CMatrix::identity(4)
            .sub(&g0.scale(c(0.3)))
            .unwrap()
            .inverse()
            .unwrap()
            .scale(c(2.0));
        assert!(r.points[0].value.max_diff(&oracle).unwrap() < 1e-9);
    }

    #[test]
    fn inhomogeneous_divergence_is_reported() {
        let eq = inhomogeneous("2", gamma0(), 0.5);
        let r = solve(&eq, &[c(1.0)]).unwrap();
        assert!(!r.converged_everywhere);
        assert!(r.solution.is_none());
        assert!(r.points[0].series[0].rho >= 1.0);
    }

    #[test]
    fn scalar_reduction() {
        let eq = inhomogeneous("0.4", unit(), 0.5);
        let r = solve(&eq, &[c(1.0)]).unwrap();
        let want = (1.0 / 0.5) / (1.0 - 0.4);
        assert!((r.points[0].value.get(0, 0) - want).norm() < 1e-9);
    }

    #[test]
    fn homogeneous_first_iterate_and_zero_b() {
        let eq = QSpinorEquation::new(EquationKind::Homogeneous { b: 1.0 }, gamma0(), ctx(0.5)).unwrap();
        let f0 = fixed_point_map(&eq, c(1.0), &CMatrix::zeros(4)).unwrap();
        assert_eq!(f0, CMatrix::scalar(4, c(2.0)));
    }

    #[test]
    fn homogeneous_without_real_fixed_point_is_not_converged() {
        // near q = 1 the scalar map is s ↦ 1/(1 − s), which has no real fixed point
        let eq = QSpinorEquation::new(EquationKind::Homogeneous { b: 1.0 }, unit(), ctx(1.0 + 1e-9))
            .unwrap()
            .with_seed(CMatrix::scalar(1, c(0.5)))
            .unwrap();
        let r = solve(&eq, &[c(1.0)]).unwrap();
        assert!(!r.converged_everywhere);
    }

    #[test]
    fn electromagnetic_decoupled_matches_inhomogeneous() {
        let em = QSpinorEquation::new(
            EquationKind::Electromagnetic {
                e: 0.0,
                m: 1.0,
                potential: p("0.7"),
                g: p("0.25*x"),
            },
            gamma0(),
            ctx(0.5),
        )
        .unwrap();
        let inh = inhomogeneous("0.25*x", gamma0(), 0.5);
        let pts = [c(1.0), c(0.5), c(1.5)];
        let a = solve(&em, &pts).unwrap();
        let b = solve(&inh, &pts).unwrap();
        assert_eq!(a.solution, b.solution);
        let zero = QSpinorEquation::new(
            EquationKind::Electromagnetic {
                e: 0.0,
                m: 1.0,
                potential: p("0"),
                g: p("0"),
            },
            gamma0(),
            ctx(0.5),
        )
        .unwrap();
        assert_eq!(
            solve(&zero, &[c(1.0)]).unwrap().points[0].value,
            CMatrix::scalar(4, c(2.0))
        );
    }

    #[test]
    fn electromagnetic_coupled_matches_scalar_iteration() {
        let q = 1.0 + 1e-9;
        let eq = QSpinorEquation::new(
            EquationKind::Electromagnetic {
                e: 1.0,
                m: 1.0,
                potential: p("0.1"),
                g: p("0.2"),
            },
            gamma0(),
            ctx(q),
        )
        .unwrap();
        let r = solve(&eq, &[c(1.0)]).unwrap();
        assert!(r.converged_everywhere);
        // γ₀ = diag(1, 1, −1, −1): each diagonal block is a scalar map
        for (i, s) in [(0, 1.0), (2, -1.0)] {
            let mut psi = 0.0f64;
            for _ in 0..1000 {
                let f = (1.0 / q) / (1.0 - s * 0.2) - (1.0 / q) / (1.0 - s * 0.1 * psi);
                psi = 0.5 * psi + 0.5 * f;
            }
            assert!((r.points[0].value.get(i, i).re - psi).abs() < 1e-9);
        }
    }

    #[test]
    fn dirac_em_complex_roots() {
        let eq = QSpinorEquation::new(
            EquationKind::DiracEm {
                e: 0.0,
                m: 1.0,
                potential: p("0"),
            },
            unit(),
            ctx(1.0 + 1e-9),
        )
        .unwrap();
        let root = Complex64::new(0.5, 3f64.sqrt() / 2.0);
        // fixed points of s ↦ 1/(1 − s) lie on |s| = 1, where the series diverges
        assert!((root - 1.0 / (1.0 - root)).norm() < 1e-15);
        assert!((root.norm() - 1.0).abs() < 1e-15);
        for seed in [0.0, 0.5] {
            let seeded = eq.clone().with_seed(CMatrix::scalar(1, c(seed))).unwrap();
            let r = solve(&seeded, &[c(1.0)]).unwrap();
            assert!(!r.converged_everywhere);
        }
    }

    #[test]
    fn potential_b_two_by_two() {
        let sig = Signature::negative(1).unwrap();
        let pre = Prefactor::Generator { signature: sig, k: 1 };
        let eq = QSpinorEquation::new(
            EquationKind::PotentialB {
                a: 1.0,
                b: 1.0,
                potential: p("0.8"),
                phi: p("0.5"),
            },
            pre,
            ctx(1.0 + 1e-9),
        )
        .unwrap();
        let r = solve(&eq, &[c(1.0)]).unwrap();
        assert!(r.converged_everywhere);
        let e = CMatrix::from_real_rows(&[&[0.0, -1.0], &[1.0, 0.0]]).unwrap();
        let e_up = e.neg();
        let mut sum = CMatrix::identity(2);
        let mut term = CMatrix::identity(2);
        for _ in 0..400 {
            term = term.mul(&e.scale(c(0.4))).unwrap();
            sum = sum.add(&term).unwrap();
        }
        let oracle = e_up.mul(&sum).unwrap().scale(c(-1.0 / (1.0 + 1e-9)));
        assert!(r.points[0].value.max_diff(&oracle).unwrap() < 1e-9);
    }

    #[test]
    fn potential_b_zero_field() {
        let sig = Signature::negative(2).unwrap();
        let pre = Prefactor::Generator { signature: sig, k: 2 };
        let eq = QSpinorEquation::new(
            EquationKind::PotentialB {
                a: 2.0,
                b: 1.0,
                potential: p("0"),
                phi: p("1"),
            },
            pre.clone(),
            ctx(0.5),
        )
        .unwrap();
        let r = solve(&eq, &[c(1.0)]).unwrap();
        let want = pre.upper().unwrap().scale(c(-1.0));
        assert!(r.points[0].value.max_diff(&want).unwrap() < 1e-15);
    }

    #[test]
    fn residual_of_manufactured_solution() {
        // ∂ψ = 3 with ψ = 3x on a q-lattice
        let q = 0.5;
        let eq = QSpinorEquation::new(EquationKind::Inhomogeneous { b: 1.0, phi: p("3") }, unit(), ctx(q)).unwrap();
        let lattice: Vec<(Complex64, CMatrix)> = (0..10)
            .map(|k| {
                let x = c(q.powi(k));
                (x, CMatrix::scalar(1, x * 3.0))
            })
            .collect();
        let exact = residual(&eq, &lattice).unwrap();
        assert!(exact <= 1e-12);
        let mut perturbed = lattice.clone();
        perturbed[0].1 = perturbed[0].1.add_scalar(c(0.1));
        assert!(residual(&eq, &perturbed).unwrap() > exact);
        assert_eq!(residual(&eq, &lattice[..1]), Err(SolveError::NoShiftedPoints));
    }

    #[test]
    fn residual_of_zero_for_homogeneous() {
        let eq = QSpinorEquation::new(EquationKind::Homogeneous { b: 2.0 }, gamma0(), ctx(0.5)).unwrap();
        let lattice = vec![(c(1.0), CMatrix::zeros(4)), (c(0.5), CMatrix::zeros(4))];
        assert_eq!(residual(&eq, &lattice).unwrap(), 0.0);
    }

    #[test]
    fn wrong_kind_is_rejected() {
        let eq = inhomogeneous("0", gamma0(), 0.5);
        assert!(matches!(
            solve_homogeneous(&eq, &[c(1.0)]),
            Err(SolveError::WrongKind { .. })
        ));
    }

    #[test]
    fn spinor_composed_source() {
        let eq = inhomogeneous("u^2", unit(), 0.5).with_u(p("0.5*x"));
        let r = solve(&eq, &[c(1.0)]).unwrap();
        let want = 2.0 / (1.0 - 0.25);
        assert!((r.points[0].value.get(0, 0) - want).norm() < 1e-9);
    }
}
