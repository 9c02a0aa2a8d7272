use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use thiserror::Error;

use super::{Expr, Func};
use crate::clifford::{CliffordError, GammaSet, Multivector, Signature};
use crate::value::{Value, ValueError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("unbound variable `{0}`")]
    Unbound(String),
    #[error("no value bound for function symbol `{0}`")]
    UnboundFunction(String),
    #[error("generator e{index} not available in {sig}")]
    Generator { index: u8, sig: Signature },
    #[error("function `{name}` failed: {message}")]
    Function { name: String, message: String },
    #[error(transparent)]
    Value(#[from] ValueError),
}

impl From<CliffordError> for EvalError {
    fn from(e: CliffordError) -> Self {
        EvalError::Value(e.into())
    }
}

/// Callable bound to an opaque function symbol.
pub type Function = Arc<dyn Fn(&Value) -> Result<Value, EvalError> + Send + Sync>;

/// Values for the free variables and opaque function symbols of an
/// expression, plus the algebra that `e_k` and `g_μ` resolve against.
#[derive(Clone)]
#[derive(Default)]
pub struct Binding {
    vars: BTreeMap<String, Value>,
    functions: BTreeMap<String, Function>,
    signature: Signature,
    gamma: GammaSet,
    generators: Option<Vec<Value>>,
}


impl fmt::Debug for Binding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Binding")
            .field("vars", &self.vars)
            .field("functions", &self.functions.keys().collect::<Vec<_>>())
            .field("signature", &self.signature)
            .field("gamma", &self.gamma.label())
            .field("custom_generators", &self.generators.is_some())
            .finish()
    }
}

impl Binding {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, name: impl Into<String>, value: impl Into<Value>) -> Self {
        self.set(name, value);
        self
    }

    pub fn set(&mut self, name: impl Into<String>, value: impl Into<Value>) {
        self.vars.insert(name.into(), value.into());
    }

    pub fn get(&self, name: &str) -> Option<&Value> {
        self.vars.get(name)
    }

    pub fn vars(&self) -> impl Iterator<Item = (&str, &Value)> {
        self.vars.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn with_signature(mut self, sig: Signature) -> Self {
        self.signature = sig;
        self
    }

    pub fn with_gamma(mut self, gamma: GammaSet) -> Self {
        self.gamma = gamma;
        self
    }

    /// Replaces the images of `e_1..e_n` with arbitrary values, e.g. a
    /// matrix algebra that need not satisfy the Clifford relations.
    pub fn with_generators(mut self, generators: Vec<Value>) -> Self {
        self.generators = Some(generators);
        self
    }

    pub fn signature(&self) -> Signature {
        self.signature
    }

    pub fn gamma(&self) -> &GammaSet {
        &self.gamma
    }

    pub fn with_function<F>(mut self, name: impl Into<String>, f: F) -> Self
    where
        F: Fn(&Value) -> Result<Value, EvalError> + Send + Sync + 'static,
    {
        self.functions.insert(name.into(), Arc::new(f));
        self
    }

    /// Binds a function symbol to tabulated values; arguments must be
    /// scalars matching a table entry within `1e-12`.
    pub fn with_table(self, name: impl Into<String>, table: Vec<(Complex64, Value)>) -> Self {
        let name = name.into();
        let fname = name.clone();
        self.with_function(name, move |arg| {
            let x = arg.as_scalar().ok_or_else(|| EvalError::Function {
                name: fname.clone(),
                message: "tabulated functions take scalar arguments".into(),
            })?;
            table
                .iter()
                .find(|(t, _)| (t - x).norm() <= 1e-12 * (1.0 + x.norm()))
                .map(|(_, v)| v.clone())
                .ok_or_else(|| EvalError::Function {
                    name: fname.clone(),
                    message: format!("no tabulated value at {x}"),
                })
        })
    }

    fn generator(&self, k: u8) -> Result<Value, EvalError> {
        if let Some(gens) = &self.generators {
            return gens
                .get(usize::from(k).wrapping_sub(1))
                .cloned()
                .ok_or(EvalError::Generator {
                    index: k,
                    sig: self.signature,
                });
        }
        Multivector::generator(self.signature, k as usize)
            .map(Value::Multivector)
            .map_err(|_| EvalError::Generator {
                index: k,
                sig: self.signature,
            })
    }
}

/// Evaluates `e` under `b`.
pub fn eval(e: &Expr, b: &Binding) -> Result<Value, EvalError> {
    Ok(match e {
        Expr::Num(c) => Value::Scalar(*c),
        Expr::Const(v) => v.clone(),
        Expr::Gen(k) => b.generator(*k)?,
        Expr::Gamma(k) => Value::Matrix(b.gamma.gamma(*k as usize)?.clone()),
        Expr::Var(n) => b.vars.get(n).cloned().ok_or_else(|| EvalError::Unbound(n.clone()))?,
        Expr::Neg(a) => eval(a, b)?.neg(),
        Expr::Call(f, a) => {
            let arg = eval(a, b)?;
            match f {
                Func::Exp => arg.exp()?,
                Func::Opaque(name) => {
                    let func = b
                        .functions
                        .get(name)
                        .ok_or_else(|| EvalError::UnboundFunction(name.clone()))?;
                    func(&arg)?
                }
            }
        }
        Expr::Add(x, y) => eval(x, b)?.add(&eval(y, b)?)?,
        Expr::Sub(x, y) => eval(x, b)?.sub(&eval(y, b)?)?,
        Expr::Mul(x, y) => eval(x, b)?.mul(&eval(y, b)?)?,
        Expr::Div(x, y) => eval(x, b)?.div(&eval(y, b)?)?,
        Expr::Pow(x, n) => eval(x, b)?.powi(*n)?,
    })
}
