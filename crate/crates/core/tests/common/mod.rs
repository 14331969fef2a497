//! Strategies and checks shared by the property suite and the acceptance
//! harness.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use num_complex::Complex64;
use proptest::prelude::*;
use proptest::test_runner::TestCaseError;

use meda::algsolve::{solve_numeric, SolveConfig};
use meda::expr::{differentiate, eval_complex, parse_expr, Bindings, Expr, Func, Scope, Symbol};
use meda::meda::{derive_system, AlgebraicSystem, Ansatz};
use meda::pde::{expand_derivatives, integrate_once, TravelingWaveOde, WaveSpec};
use meda::poly::poly_zero_check;

pub fn p(text: &str) -> Expr {
    parse_expr(text, &Scope::open()).unwrap()
}

pub fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

pub fn fixtures() -> std::path::PathBuf {
    std::path::PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

/// Random expressions in `x` (and the constant `k`) built from sums,
/// products, integer and half powers, and the four trigonometric kinds.
pub fn expr_in_x() -> BoxedStrategy<Expr> {
    expr_of_depth(4)
}

fn leaf() -> BoxedStrategy<Expr> {
    prop_oneof![
        3 => Just(Expr::sym("x")),
        1 => Just(Expr::sym("k")),
        1 => (-3i64..=3).prop_map(Expr::int),
        1 => (1i64..=4, 2i64..=5).prop_map(|(n, d)| Expr::rational(n, d)),
    ]
    .boxed()
}

/// Operators are favoured over leaves so trees reach the requested depth.
fn expr_of_depth(depth: u32) -> BoxedStrategy<Expr> {
    if depth == 0 {
        return leaf();
    }
    let inner = expr_of_depth(depth - 1);
    prop_oneof![
        1 => leaf(),
        2 => (inner.clone(), inner.clone()).prop_map(|(a, b)| a + b),
        2 => (inner.clone(), inner.clone()).prop_map(|(a, b)| a * b),
        1 => (inner.clone(), -2i64..=3).prop_map(|(a, k)| Expr::powi(a, k)),
        1 => inner.clone().prop_map(|a| Expr::sqrt(a + Expr::int(3))),
        2 => (inner, 0usize..4).prop_map(|(a, f)| {
            let f = [Func::Tan, Func::Cot, Func::Tanh, Func::Coth][f];
            Expr::func(f, a)
        }),
    ]
    .boxed()
}

/// `d/dx` against a fourth-order central difference at a complex point.
pub fn check_diff(e: &Expr, x0: (f64, f64)) -> Result<(), TestCaseError> {
    let (x, k) = (Symbol::new("x"), Symbol::new("k"));
    let at = |z: Complex64| Bindings::from([(x.clone(), z), (k.clone(), Complex64::new(0.7, 0.2))]);
    let z0 = Complex64::new(x0.0, x0.1);
    let d = differentiate(e, &x).map_err(|err| TestCaseError::fail(err.to_string()))?;
    let Ok(exact) = eval_complex(&d, &at(z0)) else {
        return Err(TestCaseError::reject("pole"));
    };
    let fd = |h: f64| -> Result<(Complex64, f64), TestCaseError> {
        let mut f = [Complex64::new(0.0, 0.0); 4];
        for (slot, off) in f.iter_mut().zip([-2.0, -1.0, 1.0, 2.0]) {
            *slot =
                eval_complex(e, &at(z0 + c(off * h))).map_err(|_| TestCaseError::reject("pole"))?;
        }
        // NaN must survive the fold, so no f64::max here
        let scale = f
            .iter()
            .map(|v| v.norm())
            .fold(0.0, |a, b| if b > a || b.is_nan() { b } else { a });
        Ok(((8.0 * (f[2] - f[1]) - (f[3] - f[0])) / c(12.0 * h), scale))
    };
    let (coarse, s1) = fd(1e-3)?;
    let (fd, s2) = fd(5e-4)?;
    let finite = [exact, coarse, fd]
        .iter()
        .all(|v| v.re.is_finite() && v.im.is_finite());
    let scale = s1.max(s2).max(exact.norm());
    if !finite || !scale.is_finite() || scale > 1e3 {
        return Err(TestCaseError::reject("near a pole"));
    }
    // the two steps disagree only where the difference quotient has not
    // converged, which says nothing about the symbolic derivative
    if (coarse - fd).norm() > 1e-7 * fd.norm().max(1.0) {
        return Err(TestCaseError::reject("difference quotient unresolved"));
    }
    let err = (exact - fd).norm();
    prop_assert!(
        err <= 1e-6 * exact.norm().max(1.0),
        "{e}: d = {d}, exact {exact}, fd {fd}"
    );
    Ok(())
}

fn rk4(b: f64, phi0: f64, span: f64, steps: usize) -> f64 {
    let f = |y: f64| b + y * y;
    let h = span / steps as f64;
    let mut y = phi0;
    for _ in 0..steps {
        let k1 = f(y);
        let k2 = f(y + h / 2.0 * k1);
        let k3 = f(y + h / 2.0 * k2);
        let k4 = f(y + h * k3);
        y += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    y
}

/// First and second z-derivatives of the ansatz, from the rewrite rule, agree
/// with differences of the ansatz along an integrated trajectory of φ.
pub fn check_rewrite(m: i64, coeffs: &[f64], b: f64, phi0: f64) -> Result<(), TestCaseError> {
    let ansatz = Ansatz::new(m).unwrap();
    let mut bind = Bindings::new();
    for (s, v) in ansatz.a.iter().chain(&ansatz.b).zip(coeffs) {
        bind.insert(s.clone(), c(*v));
    }
    bind.insert(ansatz.riccati.clone(), c(b));
    let u = ansatz.poly();
    let du = ansatz.derivative(&u);
    let d2u = ansatz.derivative(&du);
    let at_phi = |poly: &meda::poly::Poly, phi: f64| {
        let mut b2 = bind.clone();
        b2.insert(ansatz.phi.clone(), c(phi));
        eval_complex(&poly.to_expr(), &b2).unwrap().re
    };
    let h = 1e-3;
    let samples: Vec<f64> = [-2.0, -1.0, 0.0, 1.0, 2.0]
        .iter()
        .map(|k| rk4(b, phi0, k * h, 200))
        .collect();
    let vals: Vec<f64> = samples.iter().map(|phi| at_phi(&u, *phi)).collect();
    let d1 = (8.0 * (vals[3] - vals[1]) - (vals[4] - vals[0])) / (12.0 * h);
    let d2 =
        (-vals[4] + 16.0 * vals[3] - 30.0 * vals[2] + 16.0 * vals[1] - vals[0]) / (12.0 * h * h);
    let r1 = at_phi(&du, phi0);
    let r2 = at_phi(&d2u, phi0);
    prop_assert!(
        (r1 - d1).abs() <= 1e-7 * r1.abs().max(1.0),
        "first derivative {r1} vs {d1}"
    );
    prop_assert!(
        (r2 - d2).abs() <= 1e-7 * r2.abs().max(1.0),
        "second derivative {r2} vs {d2}"
    );
    Ok(())
}

pub fn boussinesq_ode() -> TravelingWaveOde {
    TravelingWaveOde {
        z: Symbol::new("z"),
        profiles: vec![Symbol::new("U")],
        params: vec![Symbol::new("lambda")],
        equations: vec![p("D(U, z, z) + U^3/2 + 3/2*lambda*U^2 + lambda^2*U")],
        wave: WaveSpec {
            sign: 1,
            speed: Symbol::new("lambda"),
        },
        factors: vec![meda::number::GaussianRational::one()],
        constants: None,
        elimination: None,
        transform: None,
    }
}

pub fn boussinesq_system() -> AlgebraicSystem {
    derive_system(&boussinesq_ode(), 1).unwrap()
}

/// Same seed, same bytes.
pub fn check_solve_determinism(system: &AlgebraicSystem, seed: u64) -> Result<(), TestCaseError> {
    let pinned = Bindings::from([(Symbol::new("a0"), c(1.0))]);
    let cfg = SolveConfig {
        starts: 40,
        seed,
        ..SolveConfig::default()
    };
    let first = solve_numeric(system, &Bindings::new(), &pinned, &cfg)
        .unwrap()
        .to_json()
        .to_string();
    let second = solve_numeric(system, &Bindings::new(), &pinned, &cfg)
        .unwrap()
        .to_json()
        .to_string();
    prop_assert_eq!(first, second);
    Ok(())
}

/// A product and a perturbed copy of its expansion.
pub fn zero_check_case() -> impl Strategy<Value = (Expr, bool)> {
    let atom = prop_oneof![
        Just(p("a")),
        Just(p("b")),
        Just(p("a*b")),
        Just(p("a^2")),
        Just(p("i*b")),
        Just(p("1/a")),
        Just(p("b^n")),
        (-3i64..=3).prop_map(Expr::int),
    ];
    let factor = prop::collection::vec(atom, 1..4).prop_map(Expr::sum);
    (
        prop::collection::vec(factor, 1..4),
        any::<bool>(),
        0usize..3,
    )
        .prop_map(|(fs, perturb, which)| {
            let product = Expr::product(fs.clone());
            let mut expanded = product.expand();
            if perturb {
                expanded = expanded + [p("a"), p("a*b^n"), Expr::rational(1, 7)][which].clone();
            }
            (product - expanded, perturb)
        })
}

/// A `true` from the zero check means the expression vanishes numerically.
pub fn check_zero(e: &Expr, point: (f64, f64, f64)) -> Result<(), TestCaseError> {
    let zero = poly_zero_check(e, &[]).map_err(|err| TestCaseError::fail(err.to_string()))?;
    let bind = Bindings::from([
        (Symbol::new("a"), Complex64::new(point.0, 0.3)),
        (Symbol::new("b"), Complex64::new(point.1, -0.2)),
        (Symbol::new("n"), c(point.2)),
    ]);
    let v = eval_complex(e, &bind).map_err(|_| TestCaseError::reject("pole"))?;
    let mut scale = 1.0f64;
    for t in e.expand().terms() {
        scale += eval_complex(&t, &bind)
            .map_err(|_| TestCaseError::reject("pole"))?
            .norm();
    }
    if zero {
        prop_assert!(
            v.norm() < 1e-9 * scale,
            "{e} checked zero but evaluates to {v}"
        );
    } else {
        prop_assert!(v.norm() > 1e-9, "{e} checked nonzero but evaluates to {v}");
    }
    Ok(())
}

/// Integrable single-profile terms.
pub fn integrable_ode() -> impl Strategy<Value = TravelingWaveOde> {
    let term = prop_oneof![
        (1i64..4).prop_map(|k| format!("D(U^{k}, z)")),
        Just("D(U, z, z)".to_string()),
        Just("D(U, z, z, z)".to_string()),
        Just("U*D(U, z)".to_string()),
        Just("D(U^n, z, z)".to_string()),
        Just("D(U, z)".to_string()),
    ];
    let coef = prop_oneof![Just("1"), Just("alpha"), Just("-3/2"), Just("i*beta")];
    prop::collection::vec((coef, term), 1..5).prop_map(|terms| {
        let text: Vec<String> = terms.iter().map(|(c, t)| format!("{c}*{t}")).collect();
        let eq = p(&text.join(" + "));
        TravelingWaveOde {
            equations: vec![eq],
            params: vec![Symbol::new("alpha"), Symbol::new("beta")],
            ..boussinesq_ode()
        }
    })
}

/// Differentiating the integrated equation returns the original.
pub fn check_integrate(ode: &TravelingWaveOde) -> Result<(), TestCaseError> {
    let deps: BTreeSet<Symbol> = ode.profiles.iter().cloned().collect();
    let Ok(once) = integrate_once(ode, &[]) else {
        return Err(TestCaseError::reject("not integrable"));
    };
    let back = meda::expr::differentiate_with(&once.equations[0], &ode.z, &deps).unwrap();
    let lhs = expand_derivatives(&back, &deps).unwrap();
    let rhs = expand_derivatives(&ode.equations[0], &deps).unwrap();
    prop_assert!(
        poly_zero_check(&(lhs - rhs), &[]).unwrap(),
        "{} integrated to {}",
        ode.equations[0],
        once.equations[0]
    );
    Ok(())
}

/// Exact substitution and numeric instantiation agree for the verified
/// Boussinesq family.
pub fn check_instantiation(system: &AlgebraicSystem, a0: (i64, i64)) -> Result<(), TestCaseError> {
    let (cand, _) = meda::algsolve::Candidate::parse(
        "arbitrary: a0\na1 = 2*i\nb1 = 0\nlambda = -a0\nb = a0^2/4\n",
    )
    .unwrap();
    let a0v = a0.0 as f64 / a0.1 as f64;
    let params = Bindings::from([(Symbol::new("a0"), c(a0v))]);
    let numeric = cand.instantiate(&params).unwrap();
    let exact: BTreeMap<Symbol, Expr> = cand
        .resolved()
        .into_iter()
        .map(|(k, v)| {
            (
                k,
                v.substitute(&BTreeMap::from([(
                    Symbol::new("a0"),
                    Expr::rational(a0.0, a0.1),
                )])),
            )
        })
        .collect();
    for (k, v) in &exact {
        let from_exact = eval_complex(v, &Bindings::new()).unwrap();
        prop_assert!((from_exact - numeric[k]).norm() < 1e-12 * from_exact.norm().max(1.0));
    }
    let mut values = params.clone();
    values.extend(numeric);
    let residuals = meda::algsolve::numeric_residuals(system, &values).unwrap();
    let scale = a0v.abs().max(1.0).powi(4);
    prop_assert!(
        residuals.iter().all(|r| *r < 1e-12 * scale),
        "{residuals:?}"
    );
    Ok(())
}
