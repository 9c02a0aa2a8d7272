//! Expression trees over coordinates, spinor indeterminates and algebra
//! constants, with a text parser, a printer, substitution, simplification
//! and numeric evaluation.
//!
//! Variables are commuting scalars. All noncommutativity lives in constants:
//! Clifford generators `e1..e8`, gamma matrices `g0..g3`, or embedded
//! [`Value`]s.

mod eval;
mod normal;
mod parser;

use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::value::Value;

pub use eval::{eval, Binding, EvalError, Function};
pub use normal::simplify;
pub use parser::{parse, parse_with, ParseError, ParseOptions, MAX_DEPTH};

/// Classification of a variable by its name.
///
/// - `q`: the deformation parameter
/// - `xd<k>`: dotted spinor indeterminate `x_{k̇}`
/// - `xa<k>`: undotted spinor indeterminate `x^k`
/// - `u`, `u<digits>`: spinor function variable `u^α_{β̇}`
/// - `dq_<name>`: formal q-differential `d^q <name>`
/// - anything else: a coordinate
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VarKind {
    Parameter,
    Coordinate,
    DottedSpinor,
    UndottedSpinor,
    SpinorFunction,
    Differential,
}

impl VarKind {
    pub fn of(name: &str) -> VarKind {
        let digits_after = |prefix: &str| {
            name.strip_prefix(prefix)
                .is_some_and(|rest| !rest.is_empty() && rest.bytes().all(|b| b.is_ascii_digit()))
        };
        if name == "q" {
            VarKind::Parameter
        } else if digits_after("xd") {
            VarKind::DottedSpinor
        } else if digits_after("xa") {
            VarKind::UndottedSpinor
        } else if name == "u" || digits_after("u") {
            VarKind::SpinorFunction
        } else if name.starts_with("dq_") {
            VarKind::Differential
        } else {
            VarKind::Coordinate
        }
    }

    /// Spinor indeterminates may serve as step variables of directional
    /// q-derivatives.
    pub fn is_spinor(self) -> bool {
        matches!(
            self,
            VarKind::DottedSpinor | VarKind::UndottedSpinor | VarKind::SpinorFunction
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Func {
    Exp,
    /// Abstract function symbol; evaluated only through a [`Binding`].
    Opaque(String),
}

impl Func {
    pub fn name(&self) -> &str {
        match self {
            Func::Exp => "exp",
            Func::Opaque(n) => n,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", content = "args", rename_all = "snake_case")]
pub enum Expr {
    Num(Complex64),
    /// Embedded literal value (multivector or matrix).
    Const(Value),
    /// Clifford generator `e_k`, 1-based; resolved against the binding's
    /// signature.
    Gen(u8),
    /// Gamma matrix `γ_μ`, 0-based; resolved against the binding's gamma set.
    Gamma(u8),
    Var(String),
    Neg(Box<Expr>),
    Call(Func, Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, i64),
}

impl Expr {
    pub fn num(x: f64) -> Expr {
        Expr::Num(Complex64::new(x, 0.0))
    }

    pub fn i() -> Expr {
        Expr::Num(Complex64::new(0.0, 1.0))
    }

    pub fn var(name: impl Into<String>) -> Expr {
        Expr::Var(name.into())
    }

    pub fn q() -> Expr {
        Expr::Var("q".into())
    }

    pub fn exp(arg: Expr) -> Expr {
        Expr::Call(Func::Exp, Box::new(arg))
    }

    pub fn call(name: impl Into<String>, arg: Expr) -> Expr {
        Expr::Call(Func::Opaque(name.into()), Box::new(arg))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn neg(self) -> Expr {
        Expr::Neg(Box::new(self))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn add(self, rhs: Expr) -> Expr {
        Expr::Add(Box::new(self), Box::new(rhs))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn sub(self, rhs: Expr) -> Expr {
        Expr::Sub(Box::new(self), Box::new(rhs))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn mul(self, rhs: Expr) -> Expr {
        Expr::Mul(Box::new(self), Box::new(rhs))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn div(self, rhs: Expr) -> Expr {
        Expr::Div(Box::new(self), Box::new(rhs))
    }

    pub fn pow(self, n: i64) -> Expr {
        Expr::Pow(Box::new(self), n)
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Expr::Num(c) if *c == Complex64::new(0.0, 0.0))
    }

    /// Direct children, left to right.
    pub fn children(&self) -> Vec<&Expr> {
        match self {
            Expr::Num(_) | Expr::Const(_) | Expr::Gen(_) | Expr::Gamma(_) | Expr::Var(_) => vec![],
            Expr::Neg(a) | Expr::Call(_, a) | Expr::Pow(a, _) => vec![a],
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => vec![a, b],
        }
    }

    pub fn depth(&self) -> usize {
        1 + self.children().iter().map(|c| c.depth()).max().unwrap_or(0)
    }

    /// Sorted, deduplicated names of free variables.
    pub fn free_vars(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.collect_vars(&mut out);
        out.sort();
        out.dedup();
        out
    }

    fn collect_vars(&self, out: &mut Vec<String>) {
        if let Expr::Var(n) = self {
            out.push(n.clone());
        }
        for c in self.children() {
            c.collect_vars(out);
        }
    }

    pub fn contains_var(&self, name: &str) -> bool {
        match self {
            Expr::Var(n) => n == name,
            _ => self.children().iter().any(|c| c.contains_var(name)),
        }
    }

    /// True when no Clifford, gamma or embedded non-scalar constant occurs.
    pub fn is_scalar_like(&self) -> bool {
        match self {
            Expr::Gen(_) | Expr::Gamma(_) => false,
            Expr::Const(v) => v.is_scalar(),
            _ => self.children().iter().all(|c| c.is_scalar_like()),
        }
    }

    /// Replaces every occurrence of variable `var` by `replacement`.
    pub fn substitute(&self, var: &str, replacement: &Expr) -> Expr {
        let sub = |e: &Expr| Box::new(e.substitute(var, replacement));
        match self {
            Expr::Var(n) if n == var => replacement.clone(),
            Expr::Num(_) | Expr::Const(_) | Expr::Gen(_) | Expr::Gamma(_) | Expr::Var(_) => self.clone(),
            Expr::Neg(a) => Expr::Neg(sub(a)),
            Expr::Call(f, a) => Expr::Call(f.clone(), sub(a)),
            Expr::Pow(a, n) => Expr::Pow(sub(a), *n),
            Expr::Add(a, b) => Expr::Add(sub(a), sub(b)),
            Expr::Sub(a, b) => Expr::Sub(sub(a), sub(b)),
            Expr::Mul(a, b) => Expr::Mul(sub(a), sub(b)),
            Expr::Div(a, b) => Expr::Div(sub(a), sub(b)),
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Add(..) | Expr::Sub(..) => 1,
            Expr::Mul(..) | Expr::Div(..) => 2,
            Expr::Neg(_) => 3,
            Expr::Pow(..) => 4,
            Expr::Num(c) if c.im == 0.0 && c.re.is_sign_negative() => 3,
            _ => 5,
        }
    }
}

/// Replaces `var` in `e` by `replacement`.
pub fn substitute(e: &Expr, var: &str, replacement: &Expr) -> Expr {
    e.substitute(var, replacement)
}

fn fmt_real(x: f64) -> String {
    format!("{x}")
}

fn fmt_complex(c: Complex64) -> String {
    if c.im == 0.0 {
        fmt_real(c.re)
    } else if c.re == 0.0 && c.im == 1.0 {
        "i".to_string()
    } else if c.re == 0.0 {
        format!("({}*i)", fmt_real(c.im))
    } else if c.im < 0.0 {
        format!("({}-{}*i)", fmt_real(c.re), fmt_real(-c.im))
    } else {
        format!("({}+{}*i)", fmt_real(c.re), fmt_real(c.im))
    }
}

fn fmt_value(v: &Value) -> String {
    match v {
        Value::Scalar(c) => fmt_complex(*c),
        Value::Multivector(m) => {
            if let Some(k) = m.as_unit_generator() {
                return format!("mv[{}:e{k}]", m.signature());
            }
            let parts: Vec<String> = m
                .terms()
                .map(|(mask, c)| format!("{mask}:{}", fmt_complex(c)))
                .collect();
            format!("mv[{}:{}]", m.signature(), parts.join(";"))
        }
        Value::Matrix(m) => {
            let rows: Vec<String> = m
                .rows()
                .into_iter()
                .map(|r| r.into_iter().map(fmt_complex).collect::<Vec<_>>().join(","))
                .collect();
            format!("mat[{}]", rows.join(";"))
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // Parenthesize a child when its precedence is below `min`.
        let child = |f: &mut fmt::Formatter<'_>, e: &Expr, min: u8| -> fmt::Result {
            if e.precedence() < min {
                write!(f, "({e})")
            } else {
                write!(f, "{e}")
            }
        };
        match self {
            Expr::Num(c) => {
                if c.im == 0.0 && c.re.is_sign_negative() {
                    write!(f, "-{}", fmt_real(-c.re))
                } else {
                    write!(f, "{}", fmt_complex(*c))
                }
            }
            Expr::Const(v) => write!(f, "{}", fmt_value(v)),
            Expr::Gen(k) => write!(f, "e{k}"),
            Expr::Gamma(k) => write!(f, "g{k}"),
            Expr::Var(n) => write!(f, "{n}"),
            Expr::Neg(a) => {
                write!(f, "-")?;
                child(f, a, 3)
            }
            Expr::Call(func, a) => write!(f, "{}({a})", func.name()),
            Expr::Pow(a, n) => {
                child(f, a, 5)?;
                write!(f, "^{n}")
            }
            Expr::Add(a, b) | Expr::Sub(a, b) => {
                child(f, a, 1)?;
                write!(f, "{}", if matches!(self, Expr::Add(..)) { "+" } else { "-" })?;
                child(f, b, 2)
            }
            Expr::Mul(a, b) | Expr::Div(a, b) => {
                child(f, a, 2)?;
                write!(f, "{}", if matches!(self, Expr::Mul(..)) { "*" } else { "/" })?;
                child(f, b, 3)
            }
        }
    }
}
