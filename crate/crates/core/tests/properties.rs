use num_complex::Complex64;
use proptest::prelude::*;
use qspin_core::clifford::{geometric_product, Multivector, Signature};
use qspin_core::expr::{eval, parse, simplify, Binding, Expr};
use qspin_core::matrix::{spectral_radius, CMatrix};
use qspin_core::qderiv::{jackson_deriv, jackson_quotient_at, QContext};
use qspin_core::qintegral::{integral_formula_rhs, jackson_contour_integral, neumann_series, QContour};
use qspin_core::{GammaSet, Value};

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

fn atom() -> impl Strategy<Value = String> {
    prop_oneof![
        (1u32..20).prop_map(|n| n.to_string()),
        (1u32..400).prop_map(|n| (n as f64 / 16.0).to_string()),
        prop::sample::select(vec!["x", "y", "q", "x_mu", "xd2", "xa1", "u", "i", "e1", "e2", "g0", "g3", "dq_x"])
            .prop_map(str::to_string),
    ]
}

fn expr_text() -> impl Strategy<Value = String> {
    atom().prop_recursive(5, 48, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(|a| format!("-({a})")),
            inner.clone().prop_map(|a| format!("exp({a})")),
            (inner.clone(), 0i64..5).prop_map(|(a, n)| format!("({a})^{n}")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("{a} + {b}")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("{a} - ({b})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a})*({b})")),
            (inner.clone(), inner).prop_map(|(a, b)| format!("({a})/({b})")),
        ]
    })
}

/// Scalar polynomials-with-division in `x`, `y`, `q`.
fn scalar_expr() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        (-4i32..=4).prop_map(|n| Expr::num(n as f64)),
        prop::sample::select(vec!["x", "y", "q"]).prop_map(Expr::var),
    ];
    leaf.prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a.add(b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a.sub(b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a.mul(b)),
            (inner.clone(), 0i64..4).prop_map(|(a, n)| a.pow(n)),
            inner.clone().prop_map(|a| a.div(Expr::var("x"))),
            inner.prop_map(Expr::neg),
        ]
    })
}

fn clifford_expr() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        (-3i32..=3).prop_map(|n| Expr::num(n as f64)),
        prop::sample::select(vec!["x", "q"]).prop_map(Expr::var),
        (1u8..=3).prop_map(Expr::Gen),
    ];
    leaf.prop_recursive(4, 20, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a.add(b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a.sub(b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a.mul(b)),
            (inner, 0i64..3).prop_map(|(a, n)| a.pow(n)),
        ]
    })
}

fn close(a: &Value, b: &Value, rel: f64) -> bool {
    let scale = a.max_norm().max(b.max_norm()).max(1.0);
    a.sub(b).map(|d| d.max_norm() <= rel * scale).unwrap_or(false)
}

fn multivector(sig: Signature) -> impl Strategy<Value = Multivector> {
    prop::collection::vec((-2.0f64..2.0, -2.0f64..2.0), sig.blade_count()).prop_map(move |coeffs| {
        coeffs.iter().enumerate().fold(Multivector::zero(sig), |acc, (mask, (re, im))| {
            acc.add(&Multivector::blade(sig, mask as u16, Complex64::new(*re, *im)))
                .unwrap()
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn print_parse_round_trip(text in expr_text()) {
        let first = parse(&text).unwrap();
        let printed = first.to_string();
        let second = parse(&printed).unwrap();
        prop_assert_eq!(&second, &first);
        prop_assert_eq!(second.to_string(), printed);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn simplify_preserves_scalar_values(
        e in scalar_expr(),
        x in 0.5f64..2.0,
        y in -2.0f64..2.0,
        q in 0.3f64..1.8,
    ) {
        let b = Binding::new().with("x", x).with("y", y).with("q", q);
        let before = eval(&e, &b).unwrap();
        let after = eval(&simplify(&e), &b).unwrap();
        prop_assert!(close(&before, &after, 1e-9), "{} vs {}: {:?} {:?}", e, simplify(&e), before, after);
    }

    #[test]
    fn simplify_keeps_generator_order(e in clifford_expr(), x in -2.0f64..2.0, q in 0.3f64..1.8) {
        let b = Binding::new().with_signature(Signature::negative(3).unwrap()).with("x", x).with("q", q);
        let before = eval(&e, &b).unwrap();
        let after = eval(&simplify(&e), &b).unwrap();
        prop_assert!(close(&before, &after, 1e-9), "{} vs {}", e, simplify(&e));
    }

    #[test]
    fn simplify_is_idempotent(e in scalar_expr()) {
        let once = simplify(&e);
        prop_assert_eq!(simplify(&once), once);
    }

    #[test]
    fn substitution_lemma(e in scalar_expr(), s in scalar_expr(), x in 0.5f64..2.0, y in -2.0f64..2.0) {
        // e[y := s] evaluated equals e evaluated with y bound to the value of s
        let b = Binding::new().with("x", x).with("y", y).with("q", 0.7);
        let sv = eval(&s, &b).unwrap();
        let lhs = eval(&e.substitute("y", &s), &b).unwrap();
        let rhs = eval(&e, &b.clone().with("y", sv)).unwrap();
        prop_assert!(close(&lhs, &rhs, 1e-9));
    }

    #[test]
    fn geometric_product_is_associative(
        a in multivector(Signature::new(1, 3).unwrap()),
        b in multivector(Signature::new(1, 3).unwrap()),
        d in multivector(Signature::new(1, 3).unwrap()),
    ) {
        let left = geometric_product(&geometric_product(&a, &b).unwrap(), &d).unwrap();
        let right = geometric_product(&a, &geometric_product(&b, &d).unwrap()).unwrap();
        prop_assert!(left.max_diff(&right).unwrap() <= 1e-12);
    }

    #[test]
    fn jackson_is_linear(f in scalar_expr(), g in scalar_expr(), a in -3.0f64..3.0, x in 0.5f64..2.0, q in 0.3f64..0.95) {
        let ctx = QContext::new(q).unwrap();
        let combo = Expr::num(a).mul(f.clone()).add(g.clone());
        let b = Binding::new().with("y", 0.4).with("q", q);
        let lhs = jackson_quotient_at(&combo, "x", c(x), &b, &ctx).unwrap();
        let jf = jackson_quotient_at(&f, "x", c(x), &b, &ctx).unwrap();
        let jg = jackson_quotient_at(&g, "x", c(x), &b, &ctx).unwrap();
        let rhs = jf.scale(c(a)).add(&jg).unwrap();
        prop_assert!(close(&lhs, &rhs, 1e-7));
    }

    #[test]
    fn jackson_product_rule(f in scalar_expr(), g in scalar_expr(), x in 0.5f64..2.0, q in 0.3f64..0.95) {
        // D(fg)(x) = f(qx)·Dg(x) + g(x)·Df(x)
        let ctx = QContext::new(q).unwrap();
        let b = Binding::new().with("y", -0.6).with("q", q);
        let d_fg = jackson_quotient_at(&f.clone().mul(g.clone()), "x", c(x), &b, &ctx).unwrap();
        let f_qx = eval(&f, &b.clone().with("x", q * x)).unwrap();
        let g_x = eval(&g, &b.clone().with("x", x)).unwrap();
        let rhs = f_qx
            .mul(&jackson_quotient_at(&g, "x", c(x), &b, &ctx).unwrap())
            .unwrap()
            .add(&g_x.mul(&jackson_quotient_at(&f, "x", c(x), &b, &ctx).unwrap()).unwrap())
            .unwrap();
        prop_assert!(close(&d_fg, &rhs, 1e-7));
    }

    #[test]
    fn symbolic_and_numeric_jackson_agree(f in scalar_expr(), x in 0.5f64..2.0, q in 0.3f64..1.8) {
        prop_assume!((q - 1.0).abs() > 1e-3);
        let ctx = QContext::new(q).unwrap();
        let b = Binding::new().with("y", 1.1).with("q", q);
        let symbolic = eval(&jackson_deriv(&f, "x", &ctx), &b.clone().with("x", x)).unwrap();
        let numeric = jackson_quotient_at(&f, "x", c(x), &b, &ctx).unwrap();
        prop_assert!(close(&symbolic, &numeric, 1e-7));
    }

    #[test]
    fn classical_limit(coeffs in prop::collection::vec(0.1f64..3.0, 1..=7), x in 0.5f64..2.0) {
        let q = 1.0 + 1e-6;
        let f = coeffs.iter().enumerate().fold(Expr::num(0.0), |acc, (k, a)| {
            acc.add(Expr::num(*a).mul(Expr::var("x").pow(k as i64)))
        });
        let d = eval(&jackson_deriv(&f, "x", &QContext::new(q).unwrap()), &Binding::new().with("x", x).with("q", q))
            .unwrap()
            .as_scalar()
            .unwrap();
        let classical: f64 = coeffs.iter().enumerate().skip(1).map(|(k, a)| a * k as f64 * x.powi(k as i32 - 1)).sum();
        prop_assert!((d.re - classical).abs() <= 1e-4 * classical.abs().max(1.0));
    }

    #[test]
    fn neumann_matches_closed_form(
        entries in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 4),
        target in 0.05f64..0.9,
    ) {
        let rows: Vec<Vec<Complex64>> = entries.chunks(2).map(|r| r.iter().map(|(a, b)| Complex64::new(*a, *b)).collect()).collect();
        let m = CMatrix::from_rows(&rows).unwrap();
        let rho = spectral_radius(&m);
        prop_assume!(rho > 1e-6);
        let m = m.scale(c(target / rho));
        let ctx = QContext::default();
        let s = neumann_series(&m, &ctx).unwrap();
        prop_assert!(s.converged);
        let closed = s.closed_form.clone().unwrap();
        prop_assert!(s.value.max_diff(&closed).unwrap() <= 10.0 * ctx.tol());
    }

    #[test]
    fn contour_integral_is_linear(a in -2.0f64..2.0, m in 0i64..5, n in 0i64..5) {
        let ctx = QContext::default();
        let contour = QContour::new(c(1.0), 200).unwrap();
        let f = Expr::var("x").pow(m);
        let g = Expr::var("x").pow(n);
        let combo = jackson_contour_integral(&Expr::num(a).mul(f.clone()).add(g.clone()), "x", &contour, &ctx).unwrap();
        let parts = jackson_contour_integral(&f, "x", &contour, &ctx)
            .unwrap()
            .scale(c(a))
            .add(&jackson_contour_integral(&g, "x", &contour, &ctx).unwrap())
            .unwrap();
        prop_assert!(close(&combo, &parts, 1e-12));
    }

    #[test]
    fn formula_rhs_scales_inversely_with_b(b in prop_oneof![-5.0f64..-0.1, 0.1f64..5.0], phi in -0.5f64..0.5) {
        let ctx = QContext::default();
        let gamma = GammaSet::dirac();
        let psi = Expr::num(phi);
        let x = Expr::var("x");
        let one = integral_formula_rhs(&psi, &x, &gamma, 0, c(1.0), 1.0, &ctx).unwrap();
        let scaled = integral_formula_rhs(&psi, &x, &gamma, 0, c(1.0), b, &ctx).unwrap();
        prop_assert_eq!(scaled.value, one.value.scale(c(1.0 / b)));
    }
}
