//! The `qspin` command line. Every command prints one JSON envelope
//!
//! ```text
//! {version, command, config, result, diagnostics[], timing_ms}
//! ```
//!
//! and exits with 0 (success), 1 (verification failure), 2 (usage or
//! parse error) or 3 (numeric or convergence error). The envelope schema
//! ships as `schema/envelope.schema.json`.

pub mod config;

use std::ffi::OsString;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use qspin_core::clifford::Multivector;
use qspin_core::expr::{parse, simplify, Binding, Expr};
use qspin_core::matrix::CMatrix;
use qspin_core::qderiv::{chain_rule_parts, derivative, directional_qdiff, QDerivKind};
use qspin_core::qintegral::{audit_clifford_identity, audit_integral_identity, jackson_contour_integral_in, Prefactor};
use qspin_core::qoperators::{
    apply_covariant_q, apply_dirac_q, apply_new_q, check_dq_squared, dirac_q_spinor_form, NewQInput, OperatorSpec,
    OuterDerivative,
};
use qspin_core::qsolve::{solve, EquationKind, QSpinorEquation, SolveError};
use qspin_core::verify::{run_suite, Suite, VerifyConfig};
use serde::Serialize;
use serde_json::{json, Value as Json};

use crate::config::{parse_config, ConfigLayer, RunConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

pub const SCHEMA: &str = include_str!("../schema/envelope.schema.json");

#[derive(Debug, Parser)]
#[command(name = "qspin", version, about = "q-deformed spinor calculus toolkit", allow_negative_numbers = true)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Config file: JSON object or flat key=value lines.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub q: Option<f64>,
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    #[arg(long, global = true)]
    pub max_terms: Option<usize>,
    /// Clifford signature as `p,q_neg`.
    #[arg(long, global = true)]
    pub signature: Option<String>,
    /// `dirac` or `chiral`.
    #[arg(long, global = true)]
    pub gamma_rep: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub x0: Option<f64>,
    /// Number of lattice points after the base.
    #[arg(long, global = true)]
    pub contour_k: Option<usize>,
    /// Write the JSON envelope here instead of stdout.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    #[arg(long, global = true)]
    pub pretty: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse an expression and print it back.
    Parse {
        #[arg(long)]
        expr: String,
        /// Also print the simplified normal form.
        #[arg(long)]
        simplify: bool,
    },
    /// Symbolic q-derivative.
    Qderiv(QderivArgs),
    /// Apply a q-operator.
    Op(OpArgs),
    /// Jackson contour integral, or an audit of the integral formula.
    Integrate(IntegrateArgs),
    /// Solve a q-spinor equation pointwise.
    Solve(SolveArgs),
    /// Run built-in invariant suites.
    Verify {
        #[arg(long)]
        suite: Option<String>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DerivKindArg {
    Jackson,
    Modified,
    Directional,
}

#[derive(Debug, Args)]
pub struct QderivArgs {
    #[arg(long, value_enum)]
    pub kind: DerivKindArg,
    #[arg(long)]
    pub expr: Option<String>,
    #[arg(long)]
    pub var: String,
    /// Direction generator, `e1`..`e8` (directional only).
    #[arg(long)]
    pub dir: Option<String>,
    /// Spinor step variable (directional only).
    #[arg(long)]
    pub step: Option<String>,
    /// Inner function `u(x)`; the expression is then `Ψ(u)` and the chain
    /// rule is applied (modified only).
    #[arg(long)]
    pub u: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OpKind {
    NewQ,
    DqSquared,
    Dirac,
    Covariant,
    SpinorForm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OuterArg {
    Jackson,
    Modified,
}

#[derive(Debug, Args)]
pub struct OpArgs {
    #[arg(long, value_enum)]
    pub op: OpKind,
    #[arg(long)]
    pub expr: String,
    #[arg(long)]
    pub mu: Option<u8>,
    #[arg(long)]
    pub nu: Option<u8>,
    /// Coordinate for the Dirac-type operators.
    #[arg(long, default_value = "x")]
    pub coord: String,
    /// Inner function; makes `--expr` a field `Ψ(u)`.
    #[arg(long)]
    pub u: Option<String>,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub charge: f64,
    #[arg(long, default_value = "0")]
    pub potential: String,
    #[arg(long, default_value_t = 16)]
    pub samples: usize,
    #[arg(long, value_enum, default_value = "jackson")]
    pub outer: OuterArg,
}

#[derive(Debug, Args)]
pub struct IntegrateArgs {
    /// Integrand, or the field `Ψ` with `--audit`.
    #[arg(long)]
    pub expr: String,
    #[arg(long, default_value = "x")]
    pub var: String,
    /// Compare the contour sum with the series formula.
    #[arg(long)]
    pub audit: bool,
    #[arg(long, default_value = "x")]
    pub u: String,
    #[arg(long, default_value_t = 0)]
    pub mu: u8,
    /// Audit the Clifford variant with generator `e_k` instead of `γ_μ`.
    #[arg(long)]
    pub generator: Option<u8>,
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    pub b: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EqArg {
    Homogeneous,
    Inhomogeneous,
    NewOp,
    Em,
    DiracEm,
    PotentialB,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[arg(long, value_enum)]
    pub eq: EqArg,
    #[arg(long)]
    pub phi: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub a: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub b: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub e: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub m: Option<f64>,
    /// Potential `A`.
    #[arg(long = "A")]
    pub potential_a: Option<String>,
    /// Potential `B`.
    #[arg(long = "B")]
    pub potential_b: Option<String>,
    #[arg(long)]
    pub g: Option<String>,
    /// Comma-separated real points.
    #[arg(long, allow_hyphen_values = true)]
    pub points: Option<String>,
    /// Gamma index of the prefactor (default 0).
    #[arg(long, conflicts_with_all = ["generator", "unit"])]
    pub mu: Option<u8>,
    /// Use Clifford generator `e_k` of the configured signature.
    #[arg(long, conflicts_with = "unit")]
    pub generator: Option<u8>,
    /// Use the 1x1 identity as prefactor.
    #[arg(long)]
    pub unit: bool,
    #[arg(long, default_value = "x")]
    pub u: String,
    /// Scalar seed `s·I` for fixed-point iterations.
    #[arg(long, allow_hyphen_values = true)]
    pub seed: Option<f64>,
    #[arg(long, default_value_t = 0.5)]
    pub damping: f64,
    #[arg(long, default_value_t = 500)]
    pub max_iterations: usize,
}

/// What a run produced: the process exit code, the envelope (absent only
/// for clap usage errors, help and version), and text for stderr.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: Option<String>,
    pub stderr: Option<String>,
}

#[derive(Debug, Serialize)]
pub struct Envelope {
    pub version: &'static str,
    pub command: String,
    pub config: RunConfig,
    pub result: Json,
    pub diagnostics: Vec<String>,
    pub timing_ms: f64,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Numeric(String),
}

fn usage(e: impl std::fmt::Display) -> Failure {
    Failure::Usage(e.to_string())
}

fn numeric(e: impl std::fmt::Display) -> Failure {
    Failure::Numeric(e.to_string())
}

struct Done {
    code: i32,
    result: Json,
    diagnostics: Vec<String>,
}

impl Done {
    fn ok(result: Json) -> Self {
        Done {
            code: EXIT_OK,
            result,
            diagnostics: Vec::new(),
        }
    }
}

fn to_json<T: Serialize>(v: &T) -> Json {
    serde_json::to_value(v).expect("results serialize to JSON")
}

/// Parses command-line arguments without running anything.
pub fn parse_args<I, T>(args: I) -> Result<Cli, clap::Error>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    Cli::try_parse_from(args)
}

pub fn run<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match parse_args(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            return if code == EXIT_OK {
                Outcome {
                    code,
                    stdout: Some(text),
                    stderr: None,
                }
            } else {
                Outcome {
                    code,
                    stdout: None,
                    stderr: Some(text),
                }
            };
        }
    };
    run_cli(&cli)
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Parse { .. } => "parse",
        Command::Qderiv(_) => "qderiv",
        Command::Op(_) => "op",
        Command::Integrate(_) => "integrate",
        Command::Solve(_) => "solve",
        Command::Verify { .. } => "verify",
    }
}

fn flag_layer(g: &GlobalArgs) -> Result<ConfigLayer, Failure> {
    let signature = match &g.signature {
        Some(s) => {
            let layer = parse_config(&format!("signature = {s}")).map_err(usage)?;
            layer.signature
        }
        None => None,
    };
    Ok(ConfigLayer {
        q: g.q,
        tol: g.tol,
        max_terms: g.max_terms,
        signature,
        gamma_rep: g.gamma_rep.clone(),
        x0: g.x0,
        contour_k: g.contour_k,
        output: g.output.clone(),
    })
}

fn resolve_config(g: &GlobalArgs) -> Result<RunConfig, Failure> {
    let mut cfg = RunConfig::default();
    if let Some(path) = &g.config {
        let text = std::fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
        cfg = cfg.overlay(&parse_config(&text).map_err(usage)?);
    }
    cfg = cfg.overlay(&flag_layer(g)?);
    cfg.validate().map_err(usage)?;
    Ok(cfg)
}

pub fn run_cli(cli: &Cli) -> Outcome {
    let start = Instant::now();
    let command = command_name(&cli.command);
    let (config, done) = match resolve_config(&cli.global) {
        Ok(cfg) => {
            let done = dispatch(&cli.command, &cfg);
            (cfg, done)
        }
        Err(f) => (RunConfig::default(), Err(f)),
    };
    let done = done.unwrap_or_else(|f| {
        let (code, msg) = match f {
            Failure::Usage(m) => (EXIT_USAGE, m),
            Failure::Numeric(m) => (EXIT_NUMERIC, m),
        };
        Done {
            code,
            result: Json::Null,
            diagnostics: vec![format!("error: {msg}")],
        }
    });
    let envelope = Envelope {
        version: env!("CARGO_PKG_VERSION"),
        command: command.to_string(),
        config: config.clone(),
        result: done.result,
        diagnostics: done.diagnostics,
        timing_ms: start.elapsed().as_secs_f64() * 1e3,
    };
    let text = if cli.global.pretty {
        serde_json::to_string_pretty(&envelope)
    } else {
        serde_json::to_string(&envelope)
    }
    .expect("envelope serializes");
    let stderr = envelope.diagnostics.iter().find(|d| d.starts_with("error:")).cloned();
    match &config.output {
        Some(path) => match std::fs::write(path, format!("{text}\n")) {
            Ok(()) => Outcome {
                code: done.code,
                stdout: None,
                stderr,
            },
            Err(e) => Outcome {
                code: EXIT_USAGE,
                stdout: Some(text),
                stderr: Some(format!("error: cannot write {}: {e}", path.display())),
            },
        },
        None => Outcome {
            code: done.code,
            stdout: Some(text),
            stderr,
        },
    }
}

fn dispatch(command: &Command, cfg: &RunConfig) -> Result<Done, Failure> {
    match command {
        Command::Parse { expr, simplify } => cmd_parse(expr, *simplify),
        Command::Qderiv(a) => cmd_qderiv(a, cfg),
        Command::Op(a) => cmd_op(a, cfg),
        Command::Integrate(a) => cmd_integrate(a, cfg),
        Command::Solve(a) => cmd_solve(a, cfg),
        Command::Verify { suite } => cmd_verify(suite.as_deref(), cfg),
    }
}

fn parse_expr(text: &str) -> Result<Expr, Failure> {
    parse(text).map_err(|e| usage(format!("cannot parse '{text}': {e}")))
}

fn cmd_parse(text: &str, with_simplified: bool) -> Result<Done, Failure> {
    let e = parse_expr(text)?;
    let mut result = json!({
        "input": text,
        "printed": e.to_string(),
        "depth": e.depth(),
        "free_vars": e.free_vars(),
        "expr": to_json(&e),
    });
    if with_simplified {
        result["simplified"] = json!(simplify(&e).to_string());
    }
    Ok(Done::ok(result))
}

fn parse_generator(text: &str) -> Result<u8, Failure> {
    text.strip_prefix('e')
        .and_then(|k| k.parse::<u8>().ok())
        .filter(|k| *k >= 1)
        .ok_or_else(|| usage(format!("direction must be e1..e8, got '{text}'")))
}

fn cmd_qderiv(a: &QderivArgs, cfg: &RunConfig) -> Result<Done, Failure> {
    let text = a.expr.as_deref().ok_or_else(|| usage("--expr is required"))?;
    let f = parse_expr(text)?;
    let ctx = cfg.context().map_err(usage)?;
    let (kind_name, result, extra) = match a.kind {
        DerivKindArg::Directional => {
            let dir = a.dir.as_deref().ok_or_else(|| usage("--dir is required for directional"))?;
            let step = a.step.as_deref().ok_or_else(|| usage("--step is required for directional"))?;
            let k = parse_generator(dir)?;
            let e = Multivector::generator(cfg.signature().map_err(usage)?, usize::from(k)).map_err(usage)?;
            let r = directional_qdiff(&f, &a.var, &e, step, &ctx).map_err(usage)?;
            ("directional", r, json!({"direction": dir, "step": step}))
        }
        DerivKindArg::Modified if a.u.is_some() => {
            let u = parse_expr(a.u.as_deref().unwrap_or("x"))?;
            let parts = chain_rule_parts(&f, &u, &a.var, &ctx).map_err(usage)?;
            let extra = json!({
                "u": u.to_string(),
                "outer": parts.outer.to_string(),
                "inner": parts.inner.to_string(),
            });
            ("modified", parts.product, extra)
        }
        kind => {
            if a.u.is_some() {
                return Err(usage("--u applies to --kind modified only"));
            }
            let k = if kind == DerivKindArg::Jackson {
                QDerivKind::Jackson
            } else {
                QDerivKind::Modified
            };
            let r = derivative(&f, &a.var, &k, &ctx).map_err(usage)?;
            (if kind == DerivKindArg::Jackson { "jackson" } else { "modified" }, r, json!({}))
        }
    };
    let mut out = json!({
        "input": text,
        "kind": kind_name,
        "var": a.var,
        "result_expr": to_json(&result),
        "result_printed": result.to_string(),
    });
    if let (Json::Object(o), Json::Object(x)) = (&mut out, extra) {
        o.extend(x);
    }
    Ok(Done::ok(out))
}

fn cmd_op(a: &OpArgs, cfg: &RunConfig) -> Result<Done, Failure> {
    let f = parse_expr(&a.expr)?;
    let ctx = cfg.context().map_err(usage)?;
    let gamma = cfg.gamma().map_err(usage)?;
    let u = a.u.as_deref().map(parse_expr).transpose()?;
    let printed = |e: Expr| json!({"result_expr": to_json(&e), "result_printed": e.to_string()});
    let new_q = || {
        OperatorSpec::new_q(
            a.mu.unwrap_or(1),
            a.nu.unwrap_or(2),
            cfg.signature().map_err(usage)?,
            ctx,
        )
        .map_err(usage)
    };
    let dirac = || OperatorSpec::dirac_q(a.mu.unwrap_or(0), gamma.clone(), &a.coord, ctx).map_err(usage);
    let (name, body, code) = match a.op {
        OpKind::NewQ => {
            let input = match &u {
                Some(u) => NewQInput::Composite {
                    psi: f.clone(),
                    u_of_x: u.clone(),
                },
                None => NewQInput::Direct(f.clone()),
            };
            ("new_q", printed(apply_new_q(&new_q()?, &input).map_err(usage)?), EXIT_OK)
        }
        OpKind::DqSquared => {
            let report = check_dq_squared(&new_q()?, &f, a.samples).map_err(numeric)?;
            let code = if report.passed() { EXIT_OK } else { EXIT_VERIFY_FAILED };
            ("dq_squared", to_json(&report), code)
        }
        OpKind::Dirac => ("dirac_q", printed(apply_dirac_q(&dirac()?, &f).map_err(usage)?), EXIT_OK),
        OpKind::Covariant => {
            let spec = OperatorSpec::covariant_q(
                a.mu.unwrap_or(0),
                gamma.clone(),
                a.charge,
                parse_expr(&a.potential)?,
                &a.coord,
                ctx,
            )
            .map_err(usage)?;
            ("covariant_q", printed(apply_covariant_q(&spec, &f).map_err(usage)?), EXIT_OK)
        }
        OpKind::SpinorForm => {
            let u = u.ok_or_else(|| usage("--u is required for spinor-form"))?;
            let outer = match a.outer {
                OuterArg::Jackson => OuterDerivative::Jackson,
                OuterArg::Modified => OuterDerivative::Modified,
            };
            let form = dirac_q_spinor_form(&f, &u, &dirac()?, outer).map_err(usage)?;
            ("spinor_form", printed(form), EXIT_OK)
        }
    };
    let mut result = json!({"operator": name, "input": a.expr});
    if let (Json::Object(o), Json::Object(x)) = (&mut result, body) {
        o.extend(x);
    }
    let diagnostics = if code == EXIT_VERIFY_FAILED {
        vec!["D_q^2 identity does not hold for this operator".to_string()]
    } else {
        Vec::new()
    };
    Ok(Done {
        code,
        result,
        diagnostics,
    })
}

fn cmd_integrate(a: &IntegrateArgs, cfg: &RunConfig) -> Result<Done, Failure> {
    let f = parse_expr(&a.expr)?;
    let ctx = cfg.context().map_err(usage)?;
    let contour = cfg.contour().map_err(usage)?;
    let gamma = cfg.gamma().map_err(usage)?;
    if !a.audit {
        let b = Binding::new()
            .with_gamma(gamma)
            .with_signature(cfg.signature().map_err(usage)?);
        let value = jackson_contour_integral_in(&f, &a.var, &contour, &ctx, &b).map_err(numeric)?;
        if !value.is_finite() {
            return Err(numeric("contour sum is not finite"));
        }
        return Ok(Done::ok(json!({
            "mode": "jackson_contour",
            "integrand": a.expr,
            "var": a.var,
            "base": to_json(&contour.base()),
            "depth": contour.depth(),
            "value": to_json(&value),
        })));
    }
    if a.b == 0.0 {
        return Err(usage("b must be nonzero"));
    }
    let u = parse_expr(&a.u)?;
    let report = match a.generator {
        Some(k) => audit_clifford_identity(&f, &u, cfg.signature().map_err(usage)?, k, &contour, a.b, &ctx),
        None => audit_integral_identity(&f, &u, &gamma, a.mu, &contour, a.b, &ctx),
    }
    .map_err(numeric)?;
    let mut diagnostics = vec![format!(
        "audit: contour sum and series formula differ by {:e} (relative {:e}); not asserted",
        report.abs_discrepancy, report.rel_discrepancy
    )];
    if !report.converged {
        diagnostics.push(format!("series diverges (spectral radius {})", report.rho));
    }
    Ok(Done {
        code: EXIT_OK,
        result: json!({"mode": "audit", "report": to_json(&report)}),
        diagnostics,
    })
}

fn parse_points(text: Option<&str>, x0: f64) -> Result<Vec<Complex64>, Failure> {
    let Some(text) = text else {
        return Ok(vec![Complex64::new(x0, 0.0)]);
    };
    let points = text
        .split(',')
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .map(|v| Complex64::new(v, 0.0))
                .ok_or_else(|| usage(format!("bad point '{}'", p.trim())))
        })
        .collect::<Result<Vec<_>, _>>()?;
    if points.is_empty() {
        return Err(usage("--points is empty"));
    }
    Ok(points)
}

fn required<T: Clone>(v: &Option<T>, flag: &str) -> Result<T, Failure> {
    v.clone().ok_or_else(|| usage(format!("--{flag} is required for this equation")))
}

fn required_expr(v: &Option<String>, flag: &str) -> Result<Expr, Failure> {
    parse_expr(&required(v, flag)?)
}

fn solve_error(e: SolveError) -> Failure {
    match e {
        SolveError::ZeroCoefficient { .. }
        | SolveError::Damping(_)
        | SolveError::SeedShape { .. }
        | SolveError::WrongKind { .. } => usage(e),
        other => numeric(other),
    }
}

fn equation_kind(a: &SolveArgs) -> Result<EquationKind, Failure> {
    Ok(match a.eq {
        EqArg::Homogeneous => EquationKind::Homogeneous { b: required(&a.b, "b")? },
        EqArg::Inhomogeneous => EquationKind::Inhomogeneous {
            b: required(&a.b, "b")?,
            phi: required_expr(&a.phi, "phi")?,
        },
        EqArg::NewOp => EquationKind::NewOpInhomogeneous {
            a: required(&a.a, "a")?,
            phi: required_expr(&a.phi, "phi")?,
        },
        EqArg::Em => EquationKind::Electromagnetic {
            e: required(&a.e, "e")?,
            m: required(&a.m, "m")?,
            potential: required_expr(&a.potential_a, "A")?,
            g: required_expr(&a.g, "g")?,
        },
        EqArg::DiracEm => EquationKind::DiracEm {
            e: required(&a.e, "e")?,
            m: required(&a.m, "m")?,
            potential: required_expr(&a.potential_a, "A")?,
        },
        EqArg::PotentialB => EquationKind::PotentialB {
            a: required(&a.a, "a")?,
            b: required(&a.b, "b")?,
            potential: required_expr(&a.potential_b, "B")?,
            phi: required_expr(&a.phi, "phi")?,
        },
    })
}

fn cmd_solve(a: &SolveArgs, cfg: &RunConfig) -> Result<Done, Failure> {
    let kind = equation_kind(a)?;
    let prefactor = if a.unit {
        Prefactor::Matrix {
            matrix: CMatrix::identity(1),
        }
    } else if let Some(k) = a.generator {
        Prefactor::Generator {
            signature: cfg.signature().map_err(usage)?,
            k,
        }
    } else {
        Prefactor::Gamma {
            set: cfg.gamma().map_err(usage)?,
            mu: a.mu.unwrap_or(0),
        }
    };
    prefactor.lower().map_err(usage)?;
    let ctx = cfg.context().map_err(usage)?;
    let mut eq = QSpinorEquation::new(kind, prefactor, ctx)
        .map_err(solve_error)?
        .with_u(parse_expr(&a.u)?)
        .with_damping(a.damping)
        .map_err(solve_error)?
        .with_max_iterations(a.max_iterations);
    if let Some(s) = a.seed {
        let dim = eq.prefactor.dim();
        eq = eq
            .with_seed(CMatrix::scalar(dim, Complex64::new(s, 0.0)))
            .map_err(solve_error)?;
    }
    let points = parse_points(a.points.as_deref(), cfg.x0)?;
    let report = solve(&eq, &points).map_err(solve_error)?;
    let mut diagnostics = Vec::new();
    for p in report.points.iter().filter(|p| !p.converged) {
        let rho = p.series.iter().map(|s| s.rho).fold(0.0, |a: f64, b| if a.is_nan() || b.is_nan() { f64::NAN } else { a.max(b) });
        diagnostics.push(match p.iterations {
            Some(n) => format!("x={}: fixed point not reached after {n} iterations (max rho {rho})", p.x.re),
            None => format!("x={}: series diverges (rho {rho})", p.x.re),
        });
    }
    if let Some(note) = &report.residual_note {
        diagnostics.push(format!("residual unavailable: {note}"));
    }
    let code = if report.converged_everywhere { EXIT_OK } else { EXIT_NUMERIC };
    Ok(Done {
        code,
        result: to_json(&report),
        diagnostics,
    })
}

fn cmd_verify(suite: Option<&str>, cfg: &RunConfig) -> Result<Done, Failure> {
    let suites: Vec<Suite> = match suite {
        Some(name) => vec![name.parse::<Suite>().map_err(usage)?],
        None => Suite::ALL.to_vec(),
    };
    let vcfg = VerifyConfig {
        ctx: cfg.context().map_err(usage)?,
        gamma: cfg.gamma().map_err(usage)?,
        contour: cfg.contour().map_err(usage)?,
    };
    let mut result = serde_json::Map::new();
    let mut diagnostics = Vec::new();
    let mut failed = false;
    for s in suites {
        let report = run_suite(s, &vcfg);
        for c in report.details.iter().filter(|c| !c.passed) {
            diagnostics.push(format!("{s}: {} failed", c.name));
        }
        failed |= !report.ok() && !report.audit;
        result.insert(
            s.name().to_string(),
            json!({"passed": report.passed, "failed": report.failed, "audit": report.audit, "details": to_json(&report.details)}),
        );
    }
    Ok(Done {
        code: if failed { EXIT_VERIFY_FAILED } else { EXIT_OK },
        result: Json::Object(result),
        diagnostics,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn json_of(args: &[&str]) -> (i32, Json) {
        let mut full = vec!["qspin"];
        full.extend_from_slice(args);
        let out = run(full);
        let v = out.stdout.as_deref().map(|s| serde_json::from_str(s).unwrap()).unwrap_or(Json::Null);
        (out.code, v)
    }

    #[test]
    fn parse_round_trip() {
        let (code, v) = json_of(&["parse", "--expr", "q * x_nu * xd2", "--simplify"]);
        assert_eq!(code, 0);
        assert_eq!(v["result"]["printed"], "q*x_nu*xd2");
        assert_eq!(v["command"], "parse");
    }

    #[test]
    fn parse_error_is_usage() {
        let (code, v) = json_of(&["parse", "--expr", "x +"]);
        assert_eq!(code, EXIT_USAGE);
        assert!(v["result"].is_null());
        assert!(v["diagnostics"][0].as_str().unwrap().starts_with("error:"));
    }

    #[test]
    fn clap_errors_have_no_envelope() {
        let out = run(["qspin", "bogus"]);
        assert_eq!(out.code, EXIT_USAGE);
        assert!(out.stdout.is_none());
        assert_eq!(run(["qspin", "--help"]).code, EXIT_OK);
    }

    #[test]
    fn qderiv_kinds() {
        let (code, v) = json_of(&["qderiv", "--kind", "jackson", "--expr", "x^2", "--var", "x"]);
        assert_eq!(code, 0);
        assert_eq!(v["result"]["result_printed"], "(q+1)*x");
        let (code, _) = json_of(&["qderiv", "--kind", "directional", "--expr", "x", "--var", "x", "--dir", "e2"]);
        assert_eq!(code, EXIT_USAGE);
        let (code, v) = json_of(&["qderiv", "--kind", "modified", "--expr", "u^2", "--var", "x", "--u", "2*x"]);
        assert_eq!(code, 0);
        assert_eq!(v["result"]["inner"], "2");
    }

    #[test]
    fn bad_config_flag_is_usage() {
        assert_eq!(json_of(&["parse", "--expr", "x", "--q", "1"]).0, EXIT_USAGE);
        assert_eq!(json_of(&["parse", "--expr", "x", "--signature", "9,9"]).0, EXIT_USAGE);
    }

    #[test]
    fn op_commands() {
        let (code, v) = json_of(&["op", "--op", "new-q", "--expr", "q*x_nu*xd2", "--mu", "1", "--nu", "2"]);
        assert_eq!(code, 0);
        let printed = v["result"]["result_printed"].as_str().unwrap().to_string();
        assert!(printed.contains("e1") && printed.contains("e2"), "{printed}");
        let (code, v) = json_of(&["op", "--op", "dq-squared", "--expr", "x_mu^2*x_nu"]);
        assert_eq!(code, 0);
        assert_eq!(v["result"]["identity_holds"], true);
        let (code, v) = json_of(&["op", "--op", "dirac", "--expr", "x^2", "--mu", "1"]);
        assert_eq!(code, 0);
        assert_eq!(v["result"]["result_printed"], "(q+1)*g1*x");
        assert_eq!(json_of(&["op", "--op", "dirac", "--expr", "x", "--mu", "7"]).0, EXIT_USAGE);
    }

    #[test]
    fn integrate_modes() {
        let (code, v) = json_of(&["integrate", "--expr", "x"]);
        assert_eq!(code, 0);
        let re = v["result"]["value"]["value"][0].as_f64().unwrap();
        assert!((re - 0.5 / 0.75).abs() < 1e-8, "{re}");
        let (code, v) = json_of(&["integrate", "--audit", "--expr", "0.1*u"]);
        assert_eq!(code, 0);
        assert_eq!(v["result"]["report"]["finite"], true);
        assert_eq!(json_of(&["integrate", "--audit", "--expr", "u", "--b", "0"]).0, EXIT_USAGE);
    }

    #[test]
    fn solve_codes() {
        let (code, v) = json_of(&["solve", "--eq", "inhomogeneous", "--phi", "0", "--b", "1", "--points", "1"]);
        assert_eq!(code, 0);
        assert!(v["result"]["residual"].is_number());
        let (code, v) = json_of(&["solve", "--eq", "inhomogeneous", "--phi", "2", "--b", "1"]);
        assert_eq!(code, EXIT_NUMERIC);
        assert_eq!(v["result"]["converged_everywhere"], false);
        assert_eq!(json_of(&["solve", "--eq", "inhomogeneous", "--phi", "0", "--b", "0"]).0, EXIT_USAGE);
        assert_eq!(json_of(&["solve", "--eq", "em", "--e", "0"]).0, EXIT_USAGE);
        assert_eq!(json_of(&["solve", "--eq", "homogeneous", "--b", "1", "--points", "1,x"]).0, EXIT_USAGE);
    }

    #[test]
    fn verify_unknown_suite() {
        assert_eq!(json_of(&["verify", "--suite", "nope"]).0, EXIT_USAGE);
        let (code, v) = json_of(&["verify", "--suite", "contour"]);
        assert_eq!(code, 0);
        assert_eq!(v["result"]["contour"]["failed"], 0);
    }
}
