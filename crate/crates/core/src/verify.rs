//! Built-in invariant suites, shared by the `verify` command and the tests.
//!
//! Each suite draws its random inputs from a fixed ChaCha seed, so reports
//! are reproducible. Audit suites only fail on non-finite output for
//! convergent inputs; their discrepancies are reported, never judged.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::clifford::{geometric_product, GammaSet, Multivector, Representation, Signature, MINKOWSKI};
use crate::expr::{eval, simplify, Binding, Expr};
use crate::matrix::{spectral_radius, CMatrix};
use crate::qderiv::{chain_rule, chain_rule_parts, jackson_deriv, modified_qderiv, QContext};
use crate::qintegral::{audit_clifford_identity, audit_integral_identity, jackson_contour_integral, neumann_series, Prefactor, QContour};
use crate::qoperators::{check_dq_squared, OperatorSpec};
use crate::qsolve::{residual, solve, EquationKind, QSpinorEquation};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Clifford,
    DqSquared,
    Neumann,
    Contour,
    QLimit,
    ChainRule,
    Solver,
    AuditIntegral,
}

impl Suite {
    pub const ALL: [Suite; 8] = [
        Suite::Clifford,
        Suite::DqSquared,
        Suite::Neumann,
        Suite::Contour,
        Suite::QLimit,
        Suite::ChainRule,
        Suite::Solver,
        Suite::AuditIntegral,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Clifford => "clifford",
            Suite::DqSquared => "dq-squared",
            Suite::Neumann => "neumann",
            Suite::Contour => "contour",
            Suite::QLimit => "q-limit",
            Suite::ChainRule => "chain-rule",
            Suite::Solver => "solver",
            Suite::AuditIntegral => "audit-integral",
        }
    }

    pub fn is_audit(self) -> bool {
        matches!(self, Suite::AuditIntegral)
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Suite::ALL
            .into_iter()
            .find(|suite| suite.name() == s)
            .ok_or_else(|| format!("unknown suite '{s}'"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl Check {
    fn bound(name: impl Into<String>, value: f64, tol: f64) -> Self {
        Check {
            name: name.into(),
            passed: value <= tol,
            value: Some(value),
            tol: Some(tol),
            note: None,
        }
    }

    fn flag(name: impl Into<String>, passed: bool) -> Self {
        Check {
            name: name.into(),
            passed,
            value: None,
            tol: None,
            note: None,
        }
    }

    fn error(name: impl Into<String>, err: impl fmt::Display) -> Self {
        Check {
            name: name.into(),
            passed: false,
            value: None,
            tol: None,
            note: Some(err.to_string()),
        }
    }

    fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub suite: Suite,
    pub passed: usize,
    pub failed: usize,
    pub audit: bool,
    pub details: Vec<Check>,
}

impl SuiteReport {
    fn from_checks(suite: Suite, details: Vec<Check>) -> Self {
        let passed = details.iter().filter(|c| c.passed).count();
        SuiteReport {
            suite,
            passed,
            failed: details.len() - passed,
            audit: suite.is_audit(),
            details,
        }
    }

    pub fn ok(&self) -> bool {
        self.failed == 0
    }
}

/// Settings the audit suite takes from the run configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct VerifyConfig {
    pub ctx: QContext,
    pub gamma: GammaSet,
    pub contour: QContour,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            ctx: QContext::default(),
            gamma: GammaSet::dirac(),
            contour: QContour::new(Complex64::new(1.0, 0.0), 200).expect("valid default contour"),
        }
    }
}

pub fn run_suite(suite: Suite, config: &VerifyConfig) -> SuiteReport {
    let checks = match suite {
        Suite::Clifford => clifford_checks(),
        Suite::DqSquared => dq_squared_checks(),
        Suite::Neumann => neumann_checks(),
        Suite::Contour => contour_checks(),
        Suite::QLimit => q_limit_checks(),
        Suite::ChainRule => chain_rule_checks(),
        Suite::Solver => solver_checks(),
        Suite::AuditIntegral => audit_checks(config),
    };
    SuiteReport::from_checks(suite, checks)
}

pub fn run_all(config: &VerifyConfig) -> Vec<SuiteReport> {
    Suite::ALL.iter().map(|&s| run_suite(s, config)).collect()
}

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

fn ctx_q(q: f64) -> QContext {
    QContext::new(q).expect("suite q is valid")
}

fn random_multivector(rng: &mut ChaCha8Rng, sig: Signature) -> Multivector {
    let mut m = Multivector::zero(sig);
    for mask in 0..sig.blade_count() as u16 {
        let coeff = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        m = m
            .add(&Multivector::blade(sig, mask, coeff))
            .expect("same signature");
    }
    m
}

fn clifford_checks() -> Vec<Check> {
    let mut out = Vec::new();
    for set in [GammaSet::dirac(), GammaSet::chiral()] {
        let mut worst: f64 = 0.0;
        for mu in 0..4 {
            for nu in 0..4 {
                let eta = if mu == nu { 2.0 * MINKOWSKI[mu] } else { 0.0 };
                let d = set
                    .anticommutator(mu, nu)
                    .and_then(|a| Ok(a.max_diff(&CMatrix::scalar(4, c(eta)))?))
                    .unwrap_or(f64::INFINITY);
                worst = worst.max(d);
            }
        }
        out.push(Check::bound(format!("gamma anticommutators ({})", set.label()), worst, 0.0));
    }
    for n in 1..=4 {
        let sig = Signature::negative(n).expect("n ≤ 4");
        let rep = Representation::new(sig);
        let (mut algebra, mut matrix): (f64, f64) = (0.0, 0.0);
        for i in 1..=n {
            for j in 1..=n {
                let expected = if i == j { -2.0 } else { 0.0 };
                let ei = Multivector::generator(sig, i).expect("in range");
                let ej = Multivector::generator(sig, j).expect("in range");
                let anti = geometric_product(&ei, &ej)
                    .and_then(|a| a.add(&geometric_product(&ej, &ei)?))
                    .and_then(|a| a.max_diff(&Multivector::scalar(sig, c(expected))))
                    .unwrap_or(f64::INFINITY);
                algebra = algebra.max(anti);
                let (mi, mj) = (rep.generator(i).expect("in range"), rep.generator(j).expect("in range"));
                let m_anti = mi
                    .mul(mj)
                    .and_then(|a| a.add(&mj.mul(mi)?))
                    .and_then(|a| a.max_diff(&CMatrix::scalar(rep.dim(), c(expected))))
                    .unwrap_or(f64::INFINITY);
                matrix = matrix.max(m_anti);
            }
        }
        out.push(Check::bound(format!("generator anticommutators Cl(0,{n})"), algebra, 0.0));
        out.push(Check::bound(format!("matrix representation Cl(0,{n})"), matrix, 0.0));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0xC1);
    let sig = Signature::new(1, 3).expect("valid");
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let (a, b, d) = (
            random_multivector(&mut rng, sig),
            random_multivector(&mut rng, sig),
            random_multivector(&mut rng, sig),
        );
        let left = geometric_product(&geometric_product(&a, &b).expect("same sig"), &d).expect("same sig");
        let right = geometric_product(&a, &geometric_product(&b, &d).expect("same sig")).expect("same sig");
        worst = worst.max(left.max_diff(&right).expect("same sig"));
    }
    out.push(Check::bound("associativity, 200 triples in Cl(1,3)", worst, 1e-12));
    out
}

fn dq_squared_checks() -> Vec<Check> {
    let mut out = Vec::new();
    for q in [0.5, 0.9, 2.0] {
        let spec = match OperatorSpec::new_q(1, 2, Signature::default(), ctx_q(q)) {
            Ok(s) => s,
            Err(e) => {
                out.push(Check::error(format!("q={q}"), e));
                continue;
            }
        };
        for a in 0..=6 {
            for b in 0..=(6 - a) {
                let f = Expr::var("x_mu").pow(a).mul(Expr::var("x_nu").pow(b));
                let name = format!("q={q} x_mu^{a}*x_nu^{b}");
                out.push(match check_dq_squared(&spec, &f, 8) {
                    Ok(r) => Check::bound(name, r.max_residual, 1e-10),
                    Err(e) => Check::error(name, e),
                });
            }
        }
    }
    out
}

fn neumann_checks() -> Vec<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x4E);
    let ctx = QContext::default();
    let mut out = Vec::new();
    for i in 0..50 {
        let n = if i % 2 == 0 { 2 } else { 4 };
        let mut m = CMatrix::zeros(n);
        for r in 0..n {
            for col in 0..n {
                m.set(r, col, Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
            }
        }
        let target = rng.gen_range(0.05..0.9);
        let rho = spectral_radius(&m);
        if rho > 0.0 {
            m = m.scale(c(target / rho));
        }
        let name = format!("matrix {i} ({n}x{n}, rho {:.3})", spectral_radius(&m));
        let diff = neumann_series(&m, &ctx).map_err(|e| e.to_string()).and_then(|s| {
            let inv = CMatrix::identity(n).sub(&m).and_then(|d| d.inverse()).map_err(|e| e.to_string())?;
            s.value.max_diff(&inv).map_err(|e| e.to_string())
        });
        out.push(match diff {
            Ok(d) => Check::bound(name, d, 1e-9),
            Err(e) => Check::error(name, e),
        });
    }
    out
}

fn contour_checks() -> Vec<Check> {
    let q = 0.5;
    let ctx = ctx_q(q);
    let x0 = 1.0;
    let contour = QContour::new(c(x0), 200).expect("valid contour");
    (0..=6)
        .map(|m| {
            let f = Expr::var("x").pow(m);
            let oracle = (1.0 - q) * x0.powi(m as i32 + 1) / (1.0 - q.powi(m as i32 + 1));
            let name = format!("x^{m}");
            match jackson_contour_integral(&f, "x", &contour, &ctx).map(|v| v.as_scalar()) {
                Ok(Some(v)) => Check::bound(name, (v - oracle).norm(), 1e-8),
                Ok(None) => Check::error(name, "non-scalar integral"),
                Err(e) => Check::error(name, e),
            }
        })
        .collect()
}

fn random_polynomial(rng: &mut ChaCha8Rng, var: &str, degree: i64) -> (Expr, Vec<f64>) {
    let coeffs: Vec<f64> = (0..=degree).map(|_| rng.gen_range(-3i32..=3) as f64).collect();
    let mut e = Expr::num(0.0);
    for (k, &a) in coeffs.iter().enumerate() {
        if a != 0.0 {
            e = e.add(Expr::num(a).mul(Expr::var(var).pow(k as i64)));
        }
    }
    (e, coeffs)
}

fn q_limit_checks() -> Vec<Check> {
    let q = 1.0 + 1e-6;
    let ctx = ctx_q(q);
    let mut rng = ChaCha8Rng::seed_from_u64(0x71);
    let mut out = Vec::new();
    for degree in 1..=6 {
        let (f, coeffs) = random_polynomial(&mut rng, "x", degree);
        let d = jackson_deriv(&f, "x", &ctx);
        let mut worst: f64 = 0.0;
        let mut failure = None;
        for k in 0..10 {
            let x = 0.5 + 0.15 * k as f64;
            let classical: f64 = coeffs.iter().enumerate().skip(1).map(|(j, a)| a * j as f64 * x.powi(j as i32 - 1)).sum();
            match eval(&d, &Binding::new().with("q", q).with("x", x)).map(|v| v.as_scalar()) {
                Ok(Some(v)) => worst = worst.max((v - classical).norm() / classical.abs().max(1.0)),
                Ok(None) => failure = Some("non-scalar derivative".to_string()),
                Err(e) => failure = Some(e.to_string()),
            }
        }
        let name = format!("degree {degree}: {f}");
        out.push(match failure {
            Some(e) => Check::error(name, e),
            None => Check::bound(name, worst, 1e-4),
        });
    }
    out
}

fn chain_rule_checks() -> Vec<Check> {
    let ctx = QContext::default();
    let mut rng = ChaCha8Rng::seed_from_u64(0xC4);
    let mut out = Vec::new();
    for i in 0..50 {
        let degree = rng.gen_range(0..=5);
        let (psi, _) = random_polynomial(&mut rng, "u", degree);
        let name = format!("identity composition {i}: {psi}");
        let direct = modified_qderiv(&psi.substitute("u", &Expr::var("x")), "x", &ctx);
        out.push(match chain_rule(&psi, &Expr::var("x"), "x", &ctx) {
            Ok(chained) => Check::flag(name, chained == direct),
            Err(e) => Check::error(name, e),
        });
    }
    let u = Expr::q().pow(2).mul(Expr::var("x_mu"));
    let psi = Expr::exp(Expr::i().mul(Expr::var("u")));
    out.push(match chain_rule_parts(&psi, &u, "x_mu", &ctx) {
        Ok(parts) => {
            let inner = simplify(&parts.inner);
            Check::flag("q^2 prefactor from u = q^2*x_mu", inner == simplify(&Expr::q().pow(2)))
                .with_note(format!("inner factor {inner}"))
        }
        Err(e) => Check::error("q^2 prefactor from u = q^2*x_mu", e),
    });
    out
}

fn unit_prefactor() -> Prefactor {
    Prefactor::Matrix {
        matrix: CMatrix::identity(1),
    }
}

fn solver_checks() -> Vec<Check> {
    let mut out = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(0x50);
    let q = 0.5;
    let mut worst: f64 = 0.0;
    let mut failure = None;
    for _ in 0..20 {
        let phi: f64 = rng.gen_range(-0.9..0.9);
        let eq = QSpinorEquation::new(
            EquationKind::Inhomogeneous {
                b: 1.0,
                phi: Expr::num(phi),
            },
            unit_prefactor(),
            ctx_q(q),
        );
        match eq.and_then(|eq| solve(&eq, &[c(1.0)])) {
            Ok(r) => worst = worst.max((r.points[0].value.get(0, 0) - (1.0 / q) / (1.0 - phi)).norm()),
            Err(e) => failure = Some(e.to_string()),
        }
    }
    out.push(match failure {
        Some(e) => Check::error("scalar reduction, 20 random phi", e),
        None => Check::bound("scalar reduction, 20 random phi", worst, 1e-10),
    });

    let cval = 3.0;
    let manufactured = QSpinorEquation::new(
        EquationKind::Inhomogeneous {
            b: 1.0,
            phi: Expr::num(cval),
        },
        unit_prefactor(),
        ctx_q(q),
    )
    .expect("valid equation");
    let lattice: Vec<(Complex64, CMatrix)> = (0..10)
        .map(|k| {
            let x = c(q.powi(k));
            (x, CMatrix::scalar(1, x * cval))
        })
        .collect();
    let mut perturbed = lattice.clone();
    perturbed[0].1 = perturbed[0].1.add_scalar(c(0.1));
    match (residual(&manufactured, &lattice), residual(&manufactured, &perturbed)) {
        (Ok(exact), Ok(bumped)) => {
            out.push(Check::bound("manufactured solution of D_q psi = c", exact, 1e-12));
            out.push(
                Check::flag("perturbation increases residual", bumped > exact)
                    .with_note(format!("{exact:e} -> {bumped:e}")),
            );
        }
        (Err(e), _) | (_, Err(e)) => out.push(Check::error("manufactured solution of D_q psi = c", e)),
    }

    let gamma0 = Prefactor::Gamma {
        set: GammaSet::dirac(),
        mu: 0,
    };
    let kinds = [
        EquationKind::Inhomogeneous {
            b: 1.0,
            phi: Expr::num(0.3),
        },
        EquationKind::Homogeneous { b: 4.0 },
        EquationKind::Electromagnetic {
            e: 1.0,
            m: 1.0,
            potential: Expr::num(0.1),
            g: Expr::num(0.2),
        },
        EquationKind::DiracEm {
            e: 1.0,
            m: 4.0,
            potential: Expr::num(0.1),
        },
    ];
    for kind in kinds {
        let name = format!("{} emits a residual", kind.name());
        let run = QSpinorEquation::new(kind, gamma0.clone(), ctx_q(q)).and_then(|eq| solve(&eq, &[c(1.0), c(1.5)]));
        out.push(match run {
            Ok(r) => Check {
                name,
                passed: r.residual.is_some(),
                value: r.residual,
                tol: None,
                note: r.residual_note,
            },
            Err(e) => Check::error(name, e),
        });
    }
    out
}

fn audit_checks(config: &VerifyConfig) -> Vec<Check> {
    let mut out = Vec::new();
    let u = Expr::var("x");
    let fields = ["0.2", "0.1*u", "0.3*u^2"];
    for field in fields {
        let psi = crate::expr::parse(field).expect("static field parses");
        let name = format!("dirac mu=0 psi={field}");
        let report = audit_integral_identity(&psi, &u, &config.gamma, 0, &config.contour, 1.0, &config.ctx);
        out.push(audit_check(name, report.map(|r| (r.converged, r.finite, r.abs_discrepancy, r.rel_discrepancy))));
    }
    let sig = Signature::negative(2).expect("valid");
    for field in fields {
        let psi = crate::expr::parse(field).expect("static field parses");
        let name = format!("clifford Cl(0,2) k=1 psi={field}");
        let report = audit_clifford_identity(&psi, &u, sig, 1, &config.contour, 1.0, &config.ctx);
        out.push(audit_check(name, report.map(|r| (r.converged, r.finite, r.abs_discrepancy, r.rel_discrepancy))));
    }
    out
}

fn audit_check<E: fmt::Display>(name: String, r: Result<(bool, bool, f64, f64), E>) -> Check {
    match r {
        Ok((converged, finite, abs, rel)) => Check {
            name,
            passed: !converged || finite,
            value: Some(abs),
            tol: None,
            note: Some(format!(
                "relative discrepancy {rel:e}; series {}",
                if converged { "converged" } else { "diverged" }
            )),
        },
        Err(e) => Check::error(name, e),
    }
}
