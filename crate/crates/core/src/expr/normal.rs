//! Normal form used by [`simplify`].
//!
//! An expression is expanded into a sum of terms `c · q^a · Πxᵢ^kᵢ · w`,
//! where `c` is a complex number, the `xᵢ` are commuting scalar atoms
//! (variables and opaque scalar subexpressions, exponents may be negative)
//! and `w` is an ordered word of noncommuting factors (generators, gamma
//! matrices, non-scalar constants). Words are never reordered.
//!
//! Division by a scalar polynomial is carried out exactly when the divisor
//! divides the numerator; otherwise the quotient is kept as an opaque atom.
//! Anything too large to expand is also kept opaque.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use num_complex::Complex64;

use super::{Expr, Func};
use crate::value::Value;

const MAX_TERMS: usize = 2000;
const MAX_EXPAND_POWER: i64 = 64;
const MAX_DIVISION_STEPS: usize = 20_000;
/// Remainder terms below this fraction of the dividend's largest
/// coefficient count as zero during exact division.
const DIVISION_EPS: f64 = 1e-13;

/// Applies sound algebraic rewrites: expansion, constant folding, collection
/// of like terms and exact cancellation of scalar polynomial quotients.
/// Noncommuting factors keep their left-to-right order.
pub fn simplify(e: &Expr) -> Expr {
    Poly::from_expr(e).to_expr()
}

#[derive(Debug, Clone)]
struct Opaque {
    key: String,
    expr: Expr,
}

impl Opaque {
    fn new(expr: Expr) -> Self {
        Opaque {
            key: expr.to_string(),
            expr,
        }
    }
}

impl PartialEq for Opaque {
    fn eq(&self, other: &Self) -> bool {
        self.key == other.key
    }
}
impl Eq for Opaque {}
impl PartialOrd for Opaque {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Opaque {
    fn cmp(&self, other: &Self) -> Ordering {
        self.key.cmp(&other.key)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
enum Atom {
    Q,
    Var(String),
    Opaque(Opaque),
}

impl Atom {
    fn to_expr(&self) -> Expr {
        match self {
            Atom::Q => Expr::q(),
            Atom::Var(n) => Expr::Var(n.clone()),
            Atom::Opaque(o) => o.expr.clone(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord)]
struct Monomial {
    atoms: BTreeMap<Atom, i64>,
    word: Vec<Opaque>,
}

impl Monomial {
    fn mul(&self, other: &Monomial) -> Option<Monomial> {
        let mut atoms = self.atoms.clone();
        for (a, &k) in &other.atoms {
            let e = atoms.entry(a.clone()).or_insert(0);
            *e = e.checked_add(k)?;
            if *e == 0 {
                atoms.remove(a);
            }
        }
        let mut word = self.word.clone();
        word.extend(other.word.iter().cloned());
        Some(Monomial { atoms, word })
    }

    fn exp(&self, a: &Atom) -> i64 {
        self.atoms.get(a).copied().unwrap_or(0)
    }

    fn degree_without_q(&self) -> i64 {
        self.atoms
            .iter()
            .filter(|(a, _)| **a != Atom::Q)
            .map(|(_, k)| *k)
            .fold(0i64, |acc, k| acc.saturating_add(k))
    }
}

/// Lexicographic monomial order on commuting exponents, `q` most
/// significant.
fn lex_cmp(a: &Monomial, b: &Monomial) -> Ordering {
    let mut keys: Vec<&Atom> = a.atoms.keys().chain(b.atoms.keys()).collect();
    keys.sort();
    keys.dedup();
    for k in keys {
        match a.exp(k).cmp(&b.exp(k)) {
            Ordering::Equal => continue,
            other => return other,
        }
    }
    Ordering::Equal
}

#[derive(Debug)]
struct TooLarge;

#[derive(Debug, Clone, Default, PartialEq)]
struct Poly {
    terms: BTreeMap<Monomial, Complex64>,
}

fn zero() -> Complex64 {
    Complex64::new(0.0, 0.0)
}

fn one() -> Complex64 {
    Complex64::new(1.0, 0.0)
}

impl Poly {
    fn constant(c: Complex64) -> Poly {
        let mut p = Poly::default();
        p.add_term(Monomial::default(), c);
        p
    }

    fn atom(a: Atom) -> Poly {
        let mut m = Monomial::default();
        m.atoms.insert(a, 1);
        let mut p = Poly::default();
        p.add_term(m, one());
        p
    }

    fn word(o: Opaque) -> Poly {
        let m = Monomial {
            atoms: BTreeMap::new(),
            word: vec![o],
        };
        let mut p = Poly::default();
        p.add_term(m, one());
        p
    }

    /// Opaque stand-in for an expression that cannot be expanded.
    fn opaque(expr: Expr) -> Poly {
        if expr.is_scalar_like() {
            Poly::atom(Atom::Opaque(Opaque::new(expr)))
        } else {
            Poly::word(Opaque::new(expr))
        }
    }

    fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    fn is_scalar_like(&self) -> bool {
        self.terms.keys().all(|m| m.word.is_empty())
    }

    fn as_constant(&self) -> Option<Complex64> {
        match self.terms.len() {
            0 => Some(zero()),
            1 => {
                let (m, c) = self.terms.iter().next()?;
                (m.atoms.is_empty() && m.word.is_empty()).then_some(*c)
            }
            _ => None,
        }
    }

    fn add_term(&mut self, m: Monomial, c: Complex64) {
        if c == zero() {
            return;
        }
        let entry = self.terms.entry(m).or_insert(zero());
        *entry += c;
        if *entry == zero() {
            self.terms.retain(|_, v| *v != zero());
        }
    }

    fn add(&self, other: &Poly) -> Poly {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), *c);
        }
        out
    }

    fn scale(&self, c: Complex64) -> Poly {
        let mut out = Poly::default();
        for (m, v) in &self.terms {
            out.add_term(m.clone(), v * c);
        }
        out
    }

    fn neg(&self) -> Poly {
        self.scale(Complex64::new(-1.0, 0.0))
    }

    fn sub(&self, other: &Poly) -> Poly {
        self.add(&other.neg())
    }

    fn mul(&self, other: &Poly) -> Result<Poly, TooLarge> {
        if self.terms.len().saturating_mul(other.terms.len()) > MAX_TERMS * 8 {
            return Err(TooLarge);
        }
        let mut out = Poly::default();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                let m = ma.mul(mb).ok_or(TooLarge)?;
                out.add_term(m, ca * cb);
            }
        }
        if out.terms.len() > MAX_TERMS {
            return Err(TooLarge);
        }
        Ok(out)
    }

    fn pow(&self, n: i64) -> Result<Poly, TooLarge> {
        debug_assert!(n >= 0);
        if n == 0 {
            return Ok(Poly::constant(one()));
        }
        if self.terms.len() == 1 {
            let (m, c) = self.terms.iter().next().expect("one term");
            if m.word.is_empty() {
                let mut atoms = BTreeMap::new();
                for (a, &k) in &m.atoms {
                    atoms.insert(a.clone(), k.checked_mul(n).ok_or(TooLarge)?);
                }
                let exp = i32::try_from(n).map_err(|_| TooLarge)?;
                let mut p = Poly::default();
                p.add_term(
                    Monomial {
                        atoms,
                        word: Vec::new(),
                    },
                    c.powi(exp),
                );
                return Ok(p);
            }
        }
        if self.is_zero() {
            return Ok(Poly::default());
        }
        if n > MAX_EXPAND_POWER {
            return Err(TooLarge);
        }
        let mut acc = Poly::constant(one());
        for _ in 0..n {
            acc = acc.mul(self)?;
        }
        Ok(acc)
    }

    /// Inverse of a single scalar term.
    fn monomial_inverse(&self) -> Option<Poly> {
        if self.terms.len() != 1 {
            return None;
        }
        let (m, c) = self.terms.iter().next()?;
        if !m.word.is_empty() || *c == zero() {
            return None;
        }
        let atoms = m
            .atoms
            .iter()
            .map(|(a, k)| k.checked_neg().map(|nk| (a.clone(), nk)))
            .collect::<Option<BTreeMap<_, _>>>()?;
        let mut p = Poly::default();
        p.add_term(
            Monomial {
                atoms,
                word: Vec::new(),
            },
            c.inv(),
        );
        Some(p)
    }

    /// `self / d` when the quotient is a polynomial.
    fn div(&self, d: &Poly) -> Option<Poly> {
        if d.is_zero() {
            return None;
        }
        if self.is_zero() {
            return Some(Poly::default());
        }
        if let Some(inv) = d.monomial_inverse() {
            return self.mul(&inv).ok();
        }
        if !d.is_scalar_like() {
            return None;
        }
        // Divide each word-group separately; d commutes with everything.
        let mut groups: BTreeMap<Vec<Opaque>, Poly> = BTreeMap::new();
        for (m, c) in &self.terms {
            let scalar_part = Monomial {
                atoms: m.atoms.clone(),
                word: Vec::new(),
            };
            groups
                .entry(m.word.clone())
                .or_default()
                .add_term(scalar_part, *c);
        }
        let mut out = Poly::default();
        for (word, group) in groups {
            let q = exact_divide(&group, d)?;
            let w = Monomial {
                atoms: BTreeMap::new(),
                word,
            };
            for (m, c) in q.terms {
                out.add_term(m.mul(&w)?, c);
            }
        }
        Some(out)
    }

    fn max_abs(&self) -> f64 {
        crate::matrix::nan_max(self.terms.values().map(|c| c.norm()))
    }

    fn leading(&self) -> Option<(&Monomial, Complex64)> {
        self.terms
            .iter()
            .max_by(|a, b| lex_cmp(a.0, b.0))
            .map(|(m, c)| (m, *c))
    }

    fn from_expr(e: &Expr) -> Poly {
        match e {
            Expr::Num(c) => Poly::constant(*c),
            Expr::Const(v) => match v.as_scalar() {
                Some(c) => Poly::constant(c),
                None => Poly::word(Opaque::new(e.clone())),
            },
            Expr::Gen(_) | Expr::Gamma(_) => Poly::word(Opaque::new(e.clone())),
            Expr::Var(n) if n == "q" => Poly::atom(Atom::Q),
            Expr::Var(n) => Poly::atom(Atom::Var(n.clone())),
            Expr::Neg(a) => Poly::from_expr(a).neg(),
            Expr::Add(a, b) => Poly::from_expr(a).add(&Poly::from_expr(b)),
            Expr::Sub(a, b) => Poly::from_expr(a).sub(&Poly::from_expr(b)),
            Expr::Mul(a, b) => {
                let (pa, pb) = (Poly::from_expr(a), Poly::from_expr(b));
                pa.mul(&pb)
                    .unwrap_or_else(|_| Poly::opaque(pa.to_expr().mul(pb.to_expr())))
            }
            Expr::Div(a, b) => {
                let (pa, pb) = (Poly::from_expr(a), Poly::from_expr(b));
                pa.div(&pb)
                    .unwrap_or_else(|| Poly::opaque(pa.to_expr().div(pb.to_expr())))
            }
            Expr::Pow(a, n) => {
                let pa = Poly::from_expr(a);
                let expanded = if *n >= 0 {
                    pa.pow(*n).ok()
                } else {
                    n.checked_neg()
                        .and_then(|m| pa.pow(m).ok())
                        .and_then(|p| Poly::constant(one()).div(&p))
                };
                expanded.unwrap_or_else(|| Poly::opaque(pa.to_expr().pow(*n)))
            }
            Expr::Call(f, a) => {
                let pa = Poly::from_expr(a);
                if let (Func::Exp, Some(c)) = (f, pa.as_constant()) {
                    return Poly::constant(c.exp());
                }
                Poly::opaque(Expr::Call(f.clone(), Box::new(pa.to_expr())))
            }
        }
    }

    fn to_expr(&self) -> Expr {
        if self.is_zero() {
            return Expr::num(0.0);
        }
        // Group by everything except the power of q.
        let mut groups: BTreeMap<Monomial, Vec<(i64, Complex64)>> = BTreeMap::new();
        for (m, c) in &self.terms {
            let mut rest = m.clone();
            let qexp = rest.atoms.remove(&Atom::Q).unwrap_or(0);
            groups.entry(rest).or_default().push((qexp, *c));
        }
        let mut ordered: Vec<(Monomial, Vec<(i64, Complex64)>)> = groups.into_iter().collect();
        ordered.sort_by(|a, b| {
            b.0.degree_without_q()
                .cmp(&a.0.degree_without_q())
                .then_with(|| a.0.cmp(&b.0))
        });
        let items: Vec<Signed> = ordered
            .into_iter()
            .map(|(rest, mut coeffs)| {
                coeffs.sort_by(|a, b| b.0.cmp(&a.0));
                group_expr(&rest, &coeffs)
            })
            .collect();
        sum(items)
    }
}

/// Exact division of scalar polynomials (no words), or `None` if `d` does
/// not divide `n`.
fn exact_divide(n: &Poly, d: &Poly) -> Option<Poly> {
    // Strip the monomial content of d and shift n to non-negative exponents.
    let mut content: BTreeMap<Atom, i64> = BTreeMap::new();
    let d_atoms: Vec<&Atom> = {
        let mut v: Vec<&Atom> = d.terms.keys().flat_map(|m| m.atoms.keys()).collect();
        v.sort();
        v.dedup();
        v
    };
    for a in d_atoms {
        let min = d.terms.keys().map(|m| m.exp(a)).min().unwrap_or(0);
        if min != 0 {
            content.insert(a.clone(), min);
        }
    }
    let content_mono = Monomial {
        atoms: content,
        word: Vec::new(),
    };
    let content_inv = Poly {
        terms: [(content_mono, one())].into_iter().collect(),
    }
    .monomial_inverse()?;
    let d_reduced = d.mul(&content_inv).ok()?;

    let mut shift: BTreeMap<Atom, i64> = BTreeMap::new();
    for m in n.terms.keys() {
        for (a, &k) in &m.atoms {
            if k < 0 {
                let e = shift.entry(a.clone()).or_insert(0);
                *e = (*e).max(k.checked_neg()?);
            }
        }
    }
    let shift_poly = Poly {
        terms: [(
            Monomial {
                atoms: shift,
                word: Vec::new(),
            },
            one(),
        )]
        .into_iter()
        .collect(),
    };
    let shift_inv = shift_poly.monomial_inverse()?;
    let mut r = n.mul(&shift_poly).ok()?;

    let (lt_m, lt_c) = {
        let (m, c) = d_reduced.leading()?;
        (m.clone(), c)
    };
    let scale = r.max_abs();
    let mut quotient = Poly::default();
    for _ in 0..MAX_DIVISION_STEPS {
        r.terms.retain(|_, c| c.norm() > DIVISION_EPS * scale);
        let Some((m_r, c_r)) = r.leading().map(|(m, c)| (m.clone(), c)) else {
            let q = quotient.mul(&shift_inv).ok()?.mul(&content_inv).ok()?;
            return Some(q);
        };
        // leading term of d must divide leading term of r
        let mut t_atoms = m_r.atoms.clone();
        for (a, &k) in &lt_m.atoms {
            let e = t_atoms.entry(a.clone()).or_insert(0);
            *e -= k;
            if *e < 0 {
                return None;
            }
            if *e == 0 {
                t_atoms.remove(a);
            }
        }
        let t = Poly {
            terms: [(
                Monomial {
                    atoms: t_atoms,
                    word: Vec::new(),
                },
                c_r / lt_c,
            )]
            .into_iter()
            .collect(),
        };
        quotient = quotient.add(&t);
        r = r.sub(&t.mul(&d_reduced).ok()?);
    }
    None
}

/// A term with its sign pulled out, plus the form used when it leads a sum.
struct Signed {
    negative: bool,
    magnitude: Expr,
    leading: Expr,
}

fn sum(items: Vec<Signed>) -> Expr {
    let mut iter = items.into_iter();
    let Some(first) = iter.next() else {
        return Expr::num(0.0);
    };
    let mut acc = first.leading;
    for it in iter {
        acc = if it.negative {
            acc.sub(it.magnitude)
        } else {
            acc.add(it.magnitude)
        };
    }
    acc
}

/// Splits a numeric coefficient into a sign and an optional magnitude factor
/// (`None` for unit magnitude).
fn numeric_factor(c: Complex64) -> (bool, Option<Expr>) {
    if c.im == 0.0 {
        let mag = c.re.abs();
        (c.re < 0.0, (mag != 1.0).then(|| Expr::num(mag)))
    } else if c.re == 0.0 {
        let mag = c.im.abs();
        let e = if mag == 1.0 {
            Expr::i()
        } else {
            Expr::num(mag).mul(Expr::i())
        };
        (c.im < 0.0, Some(e))
    } else {
        let im = Expr::num(c.im.abs()).mul(Expr::i());
        let re = Expr::num(c.re.abs());
        let re = if c.re < 0.0 { re.neg() } else { re };
        let e = if c.im < 0.0 { re.sub(im) } else { re.add(im) };
        (false, Some(e))
    }
}

fn power_expr(base: Expr, k: i64) -> Expr {
    if k == 1 {
        base
    } else {
        base.pow(k)
    }
}

fn product(factors: Vec<Expr>, negate_first: bool) -> Expr {
    let mut iter = factors.into_iter();
    let first = iter.next().unwrap_or_else(|| Expr::num(1.0));
    let first = if negate_first { first.neg() } else { first };
    iter.fold(first, |acc, f| acc.mul(f))
}

fn build_term(
    negative: bool,
    numerator: Vec<Expr>,
    denominator: Vec<Expr>,
) -> Signed {
    let make = |neg_first: bool| {
        let num = product(numerator.clone(), neg_first);
        if denominator.is_empty() {
            num
        } else {
            num.div(product(denominator.clone(), false))
        }
    };
    Signed {
        negative,
        magnitude: make(false),
        leading: make(negative),
    }
}

fn group_expr(rest: &Monomial, coeffs: &[(i64, Complex64)]) -> Signed {
    let mut numerator = Vec::new();
    let mut denominator = Vec::new();
    let mut negative = false;

    if let [(qexp, c)] = coeffs {
        let (neg, mag) = numeric_factor(*c);
        negative = neg;
        numerator.extend(mag);
        match qexp.cmp(&0) {
            Ordering::Greater => numerator.push(power_expr(Expr::q(), *qexp)),
            Ordering::Less => denominator.push(power_expr(Expr::q(), -*qexp)),
            Ordering::Equal => {}
        }
    } else {
        let items: Vec<Signed> = coeffs
            .iter()
            .map(|&(qexp, c)| {
                let (neg, mag) = numeric_factor(c);
                let mut num: Vec<Expr> = mag.into_iter().collect();
                let mut den = Vec::new();
                match qexp.cmp(&0) {
                    Ordering::Greater => num.push(power_expr(Expr::q(), qexp)),
                    Ordering::Less => den.push(power_expr(Expr::q(), -qexp)),
                    Ordering::Equal => {}
                }
                build_term(neg, num, den)
            })
            .collect();
        numerator.push(sum(items));
    }

    numerator.extend(rest.word.iter().map(|o| o.expr.clone()));
    for (a, &k) in &rest.atoms {
        if k > 0 {
            numerator.push(power_expr(a.to_expr(), k));
        } else if k < 0 {
            denominator.push(power_expr(a.to_expr(), -k));
        }
    }
    build_term(negative, numerator, denominator)
}

/// Turns an embedded constant into the shortest equivalent node.
#[allow(dead_code)]
pub(crate) fn constant_expr(v: &Value) -> Expr {
    match v {
        Value::Scalar(c) => Expr::Num(*c),
        Value::Multivector(m) => match m.as_unit_generator() {
            Some(k) => Expr::Gen(k as u8),
            None => Expr::Const(v.clone()),
        },
        Value::Matrix(_) => Expr::Const(v.clone()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    fn s(text: &str) -> String {
        simplify(&parse(text).unwrap()).to_string()
    }

    #[test]
    fn shifted_monomial_quotient() {
        assert_eq!(s("(q*(x_nu+q*e2*xd2)*xd2 - q*x_nu*xd2)/xd2"), "q^2*e2*xd2");
    }

    #[test]
    fn additive_identity() {
        assert_eq!(s("x + 0"), "x");
        assert_eq!(s("0*x + 1*y"), "y");
    }

    #[test]
    fn noncommuting_cancellation() {
        assert_eq!(s("e1*e2 - e1*e2"), "0");
        assert_eq!(s("g1*g2 - g2*g1"), "g1*g2-g2*g1");
    }

    #[test]
    fn jackson_quotient_of_square() {
        assert_eq!(s("((q*x)^2 - x^2)/((q-1)*x)"), "(q+1)*x");
        assert_eq!(s("(1 - q)/((q-1)*x)"), "-1/x");
    }

    #[test]
    fn constant_folding() {
        assert_eq!(s("exp(0)"), "1");
        assert_eq!(s("2*3+4"), "10");
        assert_eq!(s("x*x^-1"), "1");
    }

    #[test]
    fn non_divisible_quotients_stay_opaque() {
        assert_eq!(s("(x+1)/(x-1) - (x+1)/(x-1)"), "0");
        let e = s("(exp(i*q*x) - exp(i*x))/((q-1)*x)");
        assert!(e.contains("exp(i*q*x)"), "{e}");
    }

    #[test]
    fn huge_powers_do_not_expand() {
        let e = simplify(&parse("(x+y)^100000").unwrap());
        assert_eq!(e.to_string(), "(x+y)^100000");
        let e = simplify(&parse("x^9223372036854775807*x^9223372036854775807").unwrap());
        assert!(e.depth() < 10);
    }

    #[test]
    fn idempotent_on_samples() {
        for text in [
            "(q+1)*x",
            "q^2*e2*xd2",
            "-1/x",
            "2*i*x - (3+4*i)*y^2",
            "exp(i*q*x)/((q-1)*x)",
            "(x+1)/(x-1)",
            "e1*x*e2 + x*e2*e1",
        ] {
            let once = simplify(&parse(text).unwrap());
            let twice = simplify(&once);
            assert_eq!(once, twice, "{text}");
            assert_eq!(parse(&once.to_string()).unwrap(), once, "{text}");
        }
    }
}
