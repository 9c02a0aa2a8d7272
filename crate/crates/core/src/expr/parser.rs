//! Recursive-descent parser for the expression grammar.
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := primary ('^' '-'? INT)?
//! primary := NUMBER | 'i' | IDENT | IDENT '(' expr ')' | '(' expr ')'
//! ```
//!
//! Precedence is `^` > unary `−` > `* /` > `+ −`, binaries associate to the
//! left. `e1..e8` are Clifford generators and `g0..g3` gamma matrices.

use std::collections::BTreeSet;

use num_complex::Complex64;
use thiserror::Error;

use super::{Expr, Func};

/// Maximum nesting of the parsed tree, and of the parser's own recursion.
pub const MAX_DEPTH: usize = 256;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown function symbol `{name}` at byte {offset}")]
    UnknownFunction { offset: usize, name: String },
    #[error("expression nested deeper than {MAX_DEPTH} at byte {offset}")]
    TooDeep { offset: usize },
}

impl ParseError {
    pub fn offset(&self) -> usize {
        match self {
            ParseError::Syntax { offset, .. }
            | ParseError::UnknownFunction { offset, .. }
            | ParseError::TooDeep { offset } => *offset,
        }
    }
}

/// Function symbols accepted besides `exp`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseOptions {
    functions: BTreeSet<String>,
}

impl Default for ParseOptions {
    fn default() -> Self {
        ParseOptions {
            functions: ["u".to_string()].into_iter().collect(),
        }
    }
}

impl ParseOptions {
    pub fn with_function(mut self, name: impl Into<String>) -> Self {
        self.functions.insert(name.into());
        self
    }

    pub fn functions(&self) -> impl Iterator<Item = &str> {
        self.functions.iter().map(String::as_str)
    }
}

pub fn parse(text: &str) -> Result<Expr, ParseError> {
    parse_with(text, &ParseOptions::default())
}

pub fn parse_with(text: &str, options: &ParseOptions) -> Result<Expr, ParseError> {
    let tokens = lex(text)?;
    let mut p = Parser {
        tokens,
        pos: 0,
        nesting: 0,
        end: text.len(),
        options,
    };
    let (e, _) = p.expr()?;
    if let Some(tok) = p.peek() {
        return Err(ParseError::Syntax {
            offset: tok.offset,
            message: format!("unexpected {}", tok.kind.describe()),
        });
    }
    Ok(e)
}

#[derive(Debug, Clone, PartialEq)]
enum TokKind {
    Number(f64),
    Int(i64),
    Ident(String),
    Sym(u8),
}

impl TokKind {
    fn describe(&self) -> String {
        match self {
            TokKind::Number(x) => format!("number {x}"),
            TokKind::Int(n) => format!("number {n}"),
            TokKind::Ident(s) => format!("identifier `{s}`"),
            TokKind::Sym(c) => format!("`{}`", *c as char),
        }
    }
}

#[derive(Debug, Clone)]
struct Token {
    kind: TokKind,
    offset: usize,
}

fn float_literal(lit: &str, offset: usize) -> Result<f64, ParseError> {
    let bad = |why: String| ParseError::Syntax {
        offset,
        message: format!("bad number `{lit}`: {why}"),
    };
    let v = lit.parse::<f64>().map_err(|e| bad(e.to_string()))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(bad("out of range".into()))
    }
}

fn lex(text: &str) -> Result<Vec<Token>, ParseError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let b = bytes[i];
        if b.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        if b.is_ascii_digit() || (b == b'.' && bytes.get(i + 1).is_some_and(u8::is_ascii_digit)) {
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            let mut is_int = true;
            if i < bytes.len() && bytes[i] == b'.' {
                is_int = false;
                i += 1;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
            }
            let lit = &text[start..i];
            let kind = if is_int {
                match lit.parse::<i64>() {
                    Ok(n) => TokKind::Int(n),
                    Err(_) => TokKind::Number(float_literal(lit, start)?),
                }
            } else {
                TokKind::Number(float_literal(lit, start)?)
            };
            out.push(Token { kind, offset: start });
        } else if b.is_ascii_alphabetic() || b == b'_' {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push(Token {
                kind: TokKind::Ident(text[start..i].to_string()),
                offset: start,
            });
        } else if b"+-*/^()".contains(&b) {
            out.push(Token {
                kind: TokKind::Sym(b),
                offset: start,
            });
            i += 1;
        } else {
            let ch = text[i..].chars().next().unwrap_or('?');
            return Err(ParseError::Syntax {
                offset: start,
                message: format!("unexpected character `{ch}`"),
            });
        }
    }
    Ok(out)
}

struct Parser<'a> {
    tokens: Vec<Token>,
    pos: usize,
    nesting: usize,
    end: usize,
    options: &'a ParseOptions,
}

type Parsed = (Expr, usize);

impl Parser<'_> {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn offset(&self) -> usize {
        self.peek().map_or(self.end, |t| t.offset)
    }

    fn eat_sym(&mut self, sym: u8) -> bool {
        if matches!(self.peek(), Some(Token { kind: TokKind::Sym(s), .. }) if *s == sym) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect_sym(&mut self, sym: u8) -> Result<(), ParseError> {
        if self.eat_sym(sym) {
            Ok(())
        } else {
            Err(ParseError::Syntax {
                offset: self.offset(),
                message: match self.peek() {
                    Some(t) => format!("expected `{}`, found {}", sym as char, t.kind.describe()),
                    None => format!("expected `{}`, found end of input", sym as char),
                },
            })
        }
    }

    fn enter(&mut self) -> Result<(), ParseError> {
        self.nesting += 1;
        if self.nesting > MAX_DEPTH {
            Err(ParseError::TooDeep {
                offset: self.offset(),
            })
        } else {
            Ok(())
        }
    }

    fn node(&self, e: Expr, depth: usize, offset: usize) -> Result<Parsed, ParseError> {
        if depth > MAX_DEPTH {
            Err(ParseError::TooDeep { offset })
        } else {
            Ok((e, depth))
        }
    }

    fn expr(&mut self) -> Result<Parsed, ParseError> {
        let (mut lhs, mut depth) = self.term()?;
        loop {
            let offset = self.offset();
            let add = if self.eat_sym(b'+') {
                true
            } else if self.eat_sym(b'-') {
                false
            } else {
                return Ok((lhs, depth));
            };
            let (rhs, rd) = self.term()?;
            let e = if add { lhs.add(rhs) } else { lhs.sub(rhs) };
            (lhs, depth) = self.node(e, depth.max(rd) + 1, offset)?;
        }
    }

    fn term(&mut self) -> Result<Parsed, ParseError> {
        let (mut lhs, mut depth) = self.unary()?;
        loop {
            let offset = self.offset();
            let mul = if self.eat_sym(b'*') {
                true
            } else if self.eat_sym(b'/') {
                false
            } else {
                return Ok((lhs, depth));
            };
            let (rhs, rd) = self.unary()?;
            let e = if mul { lhs.mul(rhs) } else { lhs.div(rhs) };
            (lhs, depth) = self.node(e, depth.max(rd) + 1, offset)?;
        }
    }

    fn unary(&mut self) -> Result<Parsed, ParseError> {
        let offset = self.offset();
        if self.eat_sym(b'-') {
            self.enter()?;
            let (a, d) = self.unary()?;
            self.nesting -= 1;
            return self.node(a.neg(), d + 1, offset);
        }
        self.power()
    }

    fn power(&mut self) -> Result<Parsed, ParseError> {
        let (base, depth) = self.primary()?;
        let offset = self.offset();
        if !self.eat_sym(b'^') {
            return Ok((base, depth));
        }
        let negative = self.eat_sym(b'-');
        match self.peek().cloned() {
            Some(Token {
                kind: TokKind::Int(n),
                ..
            }) => {
                self.pos += 1;
                let n = if negative { -n } else { n };
                self.node(base.pow(n), depth + 1, offset)
            }
            other => Err(ParseError::Syntax {
                offset: self.offset(),
                message: format!(
                    "exponent must be an integer, found {}",
                    other.map_or("end of input".to_string(), |t| t.kind.describe())
                ),
            }),
        }
    }

    fn primary(&mut self) -> Result<Parsed, ParseError> {
        let offset = self.offset();
        let Some(tok) = self.peek().cloned() else {
            return Err(ParseError::Syntax {
                offset,
                message: "unexpected end of input".into(),
            });
        };
        match tok.kind {
            TokKind::Number(x) => {
                self.pos += 1;
                Ok((Expr::num(x), 1))
            }
            TokKind::Int(n) => {
                self.pos += 1;
                Ok((Expr::num(n as f64), 1))
            }
            TokKind::Sym(b'(') => {
                self.pos += 1;
                self.enter()?;
                let inner = self.expr()?;
                self.nesting -= 1;
                self.expect_sym(b')')?;
                Ok(inner)
            }
            TokKind::Ident(name) => {
                self.pos += 1;
                if self.eat_sym(b'(') {
                    let func = if name == "exp" {
                        Func::Exp
                    } else if self.options.functions.contains(&name) {
                        Func::Opaque(name)
                    } else {
                        return Err(ParseError::UnknownFunction { offset, name });
                    };
                    self.enter()?;
                    let (arg, d) = self.expr()?;
                    self.nesting -= 1;
                    self.expect_sym(b')')?;
                    return self.node(Expr::Call(func, Box::new(arg)), d + 1, offset);
                }
                Ok((ident_atom(&name), 1))
            }
            TokKind::Sym(_) => Err(ParseError::Syntax {
                offset,
                message: format!("unexpected {}", tok.kind.describe()),
            }),
        }
    }
}

fn ident_atom(name: &str) -> Expr {
    if name == "i" {
        return Expr::Num(Complex64::new(0.0, 1.0));
    }
    let indexed = |prefix: &str, lo: u8, hi: u8| -> Option<u8> {
        let rest = name.strip_prefix(prefix)?;
        if rest.len() != 1 {
            return None;
        }
        let d = rest.as_bytes()[0].checked_sub(b'0')?;
        (lo..=hi).contains(&d).then_some(d)
    };
    if let Some(k) = indexed("e", 1, 8) {
        Expr::Gen(k)
    } else if let Some(k) = indexed("g", 0, 3) {
        Expr::Gamma(k)
    } else {
        Expr::Var(name.to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(n: &str) -> Expr {
        Expr::var(n)
    }

    #[test]
    fn overflowing_literal_rejected() {
        let big = "9".repeat(400);
        assert!(matches!(parse(&big), Err(ParseError::Syntax { offset: 0, .. })));
        assert!(parse(&format!("x + {big}.5")).is_err());
    }

    #[test]
    fn exp_of_imaginary_coordinate() {
        let e = parse("exp(i*x_mu)").unwrap();
        assert_eq!(e, Expr::exp(Expr::i().mul(v("x_mu"))));
    }

    #[test]
    fn spinor_monomial_product() {
        let e = parse("q*x_nu*xd2").unwrap();
        assert_eq!(e, Expr::q().mul(v("x_nu")).mul(v("xd2")));
    }

    #[test]
    fn single_token() {
        assert_eq!(parse("x_mu").unwrap(), v("x_mu"));
    }

    #[test]
    fn precedence_and_associativity() {
        assert_eq!(parse("-x^2").unwrap(), v("x").pow(2).neg());
        assert_eq!(parse("a-b-c").unwrap(), v("a").sub(v("b")).sub(v("c")));
        assert_eq!(parse("a/b*c").unwrap(), v("a").div(v("b")).mul(v("c")));
        assert_eq!(parse("a+b*c").unwrap(), v("a").add(v("b").mul(v("c"))));
        assert_eq!(parse("a*-b").unwrap(), v("a").mul(v("b").neg()));
        assert_eq!(parse("x^-2").unwrap(), v("x").pow(-2));
        assert_eq!(parse("(q+1)*x").unwrap(), Expr::q().add(Expr::num(1.0)).mul(v("x")));
    }

    #[test]
    fn constants() {
        assert_eq!(parse("e2").unwrap(), Expr::Gen(2));
        assert_eq!(parse("g3").unwrap(), Expr::Gamma(3));
        assert_eq!(parse("e9").unwrap(), v("e9"));
        assert_eq!(parse("g4").unwrap(), v("g4"));
        assert_eq!(parse("i").unwrap(), Expr::i());
        assert_eq!(parse("0.25").unwrap(), Expr::num(0.25));
    }

    #[test]
    fn errors_carry_offsets() {
        let err = parse("x + * y").unwrap_err();
        assert_eq!(err.offset(), 4);
        let err = parse("x^y").unwrap_err();
        assert_eq!(err.offset(), 2);
        let err = parse("(x").unwrap_err();
        assert_eq!(err.offset(), 2);
        let err = parse("x $").unwrap_err();
        assert_eq!(err.offset(), 2);
        assert!(matches!(parse(""), Err(ParseError::Syntax { offset: 0, .. })));
    }

    #[test]
    fn unknown_function_rejected() {
        assert_eq!(
            parse("sin(x)").unwrap_err(),
            ParseError::UnknownFunction {
                offset: 0,
                name: "sin".into()
            }
        );
        let opts = ParseOptions::default().with_function("phi");
        assert_eq!(
            parse_with("phi(u)", &opts).unwrap(),
            Expr::call("phi", v("u"))
        );
        assert_eq!(parse("u(x)").unwrap(), Expr::call("u", v("x")));
    }

    #[test]
    fn depth_is_bounded() {
        let deep = "(".repeat(1000) + "x" + &")".repeat(1000);
        assert!(matches!(parse(&deep), Err(ParseError::TooDeep { .. })));
        let long = vec!["x"; 2000].join("+");
        assert!(matches!(parse(&long), Err(ParseError::TooDeep { .. })));
        let negs = "-".repeat(5000) + "x";
        assert!(matches!(parse(&negs), Err(ParseError::TooDeep { .. })));
        let ok = vec!["x"; 200].join("+");
        assert!(parse(&ok).is_ok());
    }

    #[test]
    fn huge_integers_degrade_to_floats() {
        assert_eq!(parse("99999999999999999999").unwrap(), Expr::num(1e20));
        assert!(parse("x^99999999999999999999").is_err());
    }
}
