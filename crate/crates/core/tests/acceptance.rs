//! One PASS/FAIL line per acceptance criterion; exits nonzero on any failure.

mod common;

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use proptest::strategy::Strategy;
use proptest::test_runner::{Config, TestCaseError, TestRunner};

use common::{fixtures, p};
use meda::algsolve::{solve_numeric, verify_candidate, Candidate, SolveConfig};
use meda::balance::{compute_balance, power_transform};
use meda::expr::{eval_complex, Bindings, Expr, Symbol};
use meda::pde::{integrate_once, reduce_auto, reduce_to_ode, PdeProblem, TravelingWaveOde};
use meda::pipeline::{derive, DeriveOptions, TransformChoice};
use meda::poly::poly_zero_check;
use meda::solution::{assemble, Branch, VerifiedCandidate};
use meda::verify::{pde_residual, Grid, ParamValues};

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn fail<T>(msg: impl Into<String>) -> Result<T, String> {
    Err(msg.into())
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn problem(name: &str) -> Result<PdeProblem, String> {
    PdeProblem::from_file(fixtures().join(format!("{name}.meda"))).map_err(err)
}

fn zero(e: &Expr) -> Result<bool, String> {
    poly_zero_check(e, &[]).map_err(err)
}

fn within(label: &str, start: Instant, limit: Duration) -> Result<(), String> {
    let took = start.elapsed();
    if took > limit {
        return fail(format!("{label} took {took:.2?}, limit {limit:?}"));
    }
    Ok(())
}

fn single(ode: &TravelingWaveOde) -> Result<Expr, String> {
    ode.single().cloned().map_err(err)
}

fn reductions() -> Check {
    let limit = Duration::from_secs(1);

    let t = Instant::now();
    let rlw = integrate_once(&reduce_to_ode(&problem("rlw")?).map_err(err)?, &[]).map_err(err)?;
    if !zero(&(single(&rlw)? - p("(alpha - c)*U - lambda*U^n + beta*c*D(U^n, z, z)")))? {
        return fail(format!("RLW reduced to {}", single(&rlw)?));
    }
    within("RLW", t, limit)?;

    let t = Instant::now();
    let phi4 = reduce_to_ode(&problem("phi4")?).map_err(err)?;
    if !zero(&(single(&phi4)? - p("-lambda*U + beta*U^n - (c^2 - alpha)*D(U, z, z)")))? {
        return fail(format!("PHI-four reduced to {}", single(&phi4)?));
    }
    within("PHI-four", t, limit)?;

    let t = Instant::now();
    let bq = reduce_auto(&problem("boussinesq")?, &[]).map_err(err)?;
    let el = bq
        .elimination
        .as_ref()
        .ok_or("Boussinesq reduction did not eliminate v")?;
    if !zero(&(el.expr.clone() - p("-lambda*U - U^2/2")))? {
        return fail(format!("V = {}", el.expr));
    }
    let ode = single(&bq)?;
    let want = p("D(U, z, z) + U^3/2 + 3/2*lambda*U^2 + lambda^2*U");
    if !zero(&(ode.clone() - want.clone()))? && !zero(&(ode.clone() + want))? {
        return fail(format!("Boussinesq reduced to {ode}"));
    }
    within("Boussinesq", t, limit)?;
    Ok("RLW, PHI-four and Boussinesq reductions match hand-entered targets".into())
}

fn balances() -> Check {
    let rlw = derive(
        &problem("rlw")?,
        &DeriveOptions {
            transform: TransformChoice::Auto,
            ..Default::default()
        },
    )
    .map_err(err)?;
    let phi4 = derive(
        &problem("phi4")?,
        &DeriveOptions {
            transform: TransformChoice::Auto,
            ..Default::default()
        },
    )
    .map_err(err)?;
    let bq = derive(&problem("boussinesq")?, &DeriveOptions::default()).map_err(err)?;
    if !zero(&(rlw.balance.to_expr() - p("-2/(n - 1)")))? || rlw.m != 2 {
        return fail(format!("RLW: M = {} then {}", rlw.balance, rlw.m));
    }
    if !zero(&(phi4.balance.to_expr() - p("2/(n - 1)")))? || phi4.m != 2 {
        return fail(format!("PHI-four: M = {} then {}", phi4.balance, phi4.m));
    }
    if bq.balance.as_integer() != Some(1) || bq.m != 1 {
        return fail(format!("Boussinesq: M = {}", bq.balance));
    }
    let after = compute_balance(&rlw.working).map_err(err)?;
    if after.as_integer() != Some(2) {
        return fail(format!("RLW after transform: M = {after}"));
    }
    Ok("M = -2/(n-1) -> 2, 2/(n-1) -> 2, 1".into())
}

fn transforms() -> Check {
    let rlw = integrate_once(&reduce_to_ode(&problem("rlw")?).map_err(err)?, &[]).map_err(err)?;
    let out = single(&power_transform(&rlw, &p("-1/(n - 1)")).map_err(err)?)?;
    let want = p(
        "(alpha - c)*(n - 1)^2*V^3 - lambda*(n - 1)^2*V^2 - beta*c*n*(n - 1)*V*D(V, z, z) \
         + beta*c*n*(2*n - 1)*D(V, z)^2",
    );
    if !zero(&(out.clone() - want))? {
        return fail(format!("RLW transformed to {out}"));
    }

    let phi4 = reduce_to_ode(&problem("phi4")?).map_err(err)?;
    let out = single(&power_transform(&phi4, &p("1/(n - 1)")).map_err(err)?)?;
    let want = p(
        "-lambda*(n - 1)^2*V^2 + beta*(n - 1)^2*V^3 + (alpha - c^2)*(n - 1)*V*D(V, z, z) \
         + (alpha - c^2)*(2 - n)*D(V, z)^2",
    );
    if !zero(&(out.clone() - want))? {
        return fail(format!("PHI-four transformed to {out}"));
    }

    // n = 2 by hand: U = 1/V, (U^2)'' = -2 V''/V^3 + 6 V'^2/V^4, times V^4
    let at_two = BTreeMap::from([(Symbol::new("n"), Expr::int(2))]);
    let rlw2 = TravelingWaveOde {
        equations: vec![single(&rlw)?.substitute(&at_two)],
        ..rlw.clone()
    };
    let out = single(&power_transform(&rlw2, &p("-1")).map_err(err)?)?;
    let want = p("(alpha - c)*V^3 - lambda*V^2 - 2*beta*c*V*D(V, z, z) + 6*beta*c*D(V, z)^2");
    if !zero(&(out.clone() - want))? {
        return fail(format!("RLW at n = 2 transformed to {out}"));
    }
    Ok("both transformed equations and the n = 2 form are identities".into())
}

/// Max PDE residual and skipped fraction of `fields` at a0 = 1 and a0 = -1/2.
fn kink_residual(problem: &PdeProblem, fields: &[(Symbol, Expr)]) -> Result<(f64, f64), String> {
    let mut worst = (0.0f64, 0.0f64);
    for a0 in [p("1"), p("-1/2")] {
        let values: ParamValues = BTreeMap::from([
            (Symbol::new("a0"), a0.clone()),
            (Symbol::new("lambda"), -a0),
        ]);
        let r = pde_residual(problem, fields, &Grid::default(), &values).map_err(err)?;
        worst = (worst.0.max(r.max()), worst.1.max(r.skipped_fraction()));
    }
    Ok(worst)
}

fn boussinesq_end_to_end() -> Check {
    let start = Instant::now();
    let d = derive(&problem("boussinesq")?, &DeriveOptions::default()).map_err(err)?;
    let pinned = Bindings::from([(Symbol::new("a0"), Complex64::new(1.0, 0.0))]);
    let out = solve_numeric(
        &d.system,
        &Bindings::new(),
        &pinned,
        &SolveConfig::default(),
    )
    .map_err(err)?;
    let near = |c: &Candidate, k: &str, v: Complex64| {
        c.numeric
            .get(&Symbol::new(k))
            .is_some_and(|x| (x - v).norm() < 1e-6)
    };
    for s in [1.0, -1.0] {
        let found = out.candidates.iter().any(|c| {
            near(c, "a1", Complex64::new(0.0, 2.0 * s))
                && near(c, "b1", Complex64::new(0.0, 0.0))
                && near(c, "b", Complex64::new(0.25, 0.0))
                && near(c, "lambda", Complex64::new(-1.0, 0.0))
        });
        if !found {
            return fail(format!(
                "no root with a1 = {}2i among {} candidates",
                if s > 0.0 { "" } else { "-" },
                out.candidates.len()
            ));
        }
    }

    let mut kink = None;
    for a1 in ["2*i", "-2*i"] {
        let text = format!("a1 = {a1}\nb1 = 0\nlambda = -a0\nb = a0^2/4\narbitrary: a0\n");
        let (cand, _) = Candidate::parse(&text).map_err(err)?;
        let report = verify_candidate(&d.system, &cand).map_err(err)?;
        if !report.pass {
            return fail(format!(
                "a1 = {a1} does not verify: {:?}",
                report.equations.iter().find(|e| !e.zero)
            ));
        }
        if a1 == "2*i" {
            kink = Some(VerifiedCandidate::new(&d.system, cand).map_err(err)?);
        }
    }
    let sol = assemble(
        &d.problem,
        &d.working,
        &d.system,
        &kink.unwrap(),
        Branch::Tanh,
    )
    .map_err(err)?;

    // the assembled u is the kink a0(1 - tanh(a0/2 (x - a0 t)))
    let u = &sol.fields()[0].1;
    let text = p("a0*(1 - tanh(a0/2*(x - a0*t)))");
    for (x, t) in [(0.3, 0.1), (-1.2, 0.7), (1.9, 0.4)] {
        let at = Bindings::from([
            (Symbol::new("x"), Complex64::new(x, 0.0)),
            (Symbol::new("t"), Complex64::new(t, 0.0)),
            (Symbol::new("a0"), Complex64::new(1.0, 0.0)),
            (Symbol::new("lambda"), Complex64::new(-1.0, 0.0)),
        ]);
        let (a, b) = (
            eval_complex(u, &at).map_err(err)?,
            eval_complex(&text, &at).map_err(err)?,
        );
        if (a - b).norm() > 1e-12 {
            return fail(format!(
                "assembled u = {u} differs from the kink at ({x}, {t})"
            ));
        }
    }
    let (max, skipped) = kink_residual(&d.problem, sol.fields())?;
    if max >= 1e-8 || skipped >= 0.1 {
        return fail(format!(
            "PDE residual {max:.2e}, {:.0}% skipped",
            skipped * 100.0
        ));
    }
    within("end to end", start, Duration::from_secs(5))?;
    Ok(format!(
        "a1 = +-2i found and verified; PDE residual {max:.2e}; {:.2?}",
        start.elapsed()
    ))
}

fn compatibility() -> Check {
    let start = Instant::now();
    let report = meda::compat::run_all(&fixtures(), None).map_err(err)?;
    let printed: Vec<_> = report
        .rows
        .iter()
        .filter(|r| !r.case.ends_with("-corrected"))
        .collect();
    if printed.len() != 11 {
        return fail(format!("{} printed cases, want 11", printed.len()));
    }
    for r in &report.rows {
        if !r.agrees() {
            return fail(format!("{} disagrees with its expected outcome", r.case));
        }
        if r.pass && r.ode_residual.is_none_or(|v| v >= 1e-8) {
            return fail(format!("{}: ODE residual {:?}", r.case, r.ode_residual));
        }
    }
    let outcome = |name: &str| report.rows.iter().find(|r| r.case == name).map(|r| r.pass);
    if outcome("boussinesq-case-I") != Some(false)
        || outcome("boussinesq-case-I-corrected") != Some(true)
    {
        return fail("Boussinesq Case I fail/pass pair missing");
    }
    within("compat", start, Duration::from_secs(30))?;
    let passes = report.rows.iter().filter(|r| r.pass).count();
    Ok(format!(
        "{} rows, {passes} pass; {:.2?}",
        report.rows.len(),
        start.elapsed()
    ))
}

fn suite<S: Strategy>(
    name: &str,
    cases: u32,
    strategy: S,
    test: impl Fn(S::Value) -> Result<(), TestCaseError>,
) -> Result<String, String> {
    let start = Instant::now();
    let config = Config {
        cases,
        max_global_rejects: 10_000,
        failure_persistence: None,
        ..Config::default()
    };
    TestRunner::new(config)
        .run(&strategy, test)
        .map_err(|e| format!("{name}: {e}"))?;
    within(name, start, Duration::from_secs(10))?;
    Ok(format!("{name} ({cases}) {:.2?}", start.elapsed()))
}

fn properties() -> Check {
    let system = common::boussinesq_system();
    let lines = [
        suite(
            "derivatives",
            200,
            (common::expr_in_x(), -1.0f64..1.0, 0.1f64..1.0),
            |(e, re, im)| common::check_diff(&e, (re, im)),
        )?,
        suite(
            "rewrite rule",
            200,
            (
                1i64..=2,
                proptest::collection::vec(-2.0f64..2.0, 5),
                -1.0f64..1.0,
                0.5f64..1.5,
            ),
            |(m, coeffs, b, phi0)| common::check_rewrite(m, &coeffs, b, phi0),
        )?,
        suite("solver determinism", 4, proptest::num::u64::ANY, |seed| {
            common::check_solve_determinism(&system, seed)
        })?,
        suite(
            "zero check",
            200,
            (
                common::zero_check_case(),
                0.3f64..1.5,
                0.3f64..1.5,
                0.5f64..2.5,
            ),
            |((e, _), a, b, n)| common::check_zero(&e, (a, b, n)),
        )?,
    ];
    Ok(lines.join("; "))
}

fn oracle_independence() -> Check {
    let source = include_str!("../src/verify.rs");
    for banned in [
        "crate::meda",
        "crate::algsolve",
        "crate::solution",
        "crate::pipeline",
    ] {
        if source.contains(banned) {
            return fail(format!("the verifier imports {banned}"));
        }
    }
    let u = p("a0*(1 - tanh(a0/2*(x - a0*t)))");
    let v = p("a0*u - u^2/2").substitute(&BTreeMap::from([(Symbol::new("u"), u.clone())]));
    let fields = [(Symbol::new("u"), u), (Symbol::new("v"), v)];
    let (max, skipped) = kink_residual(&problem("boussinesq")?, &fields)?;
    if max >= 1e-8 || skipped >= 0.1 {
        return fail(format!(
            "text-supplied kink: PDE residual {max:.2e}, {:.0}% skipped",
            skipped * 100.0
        ));
    }
    Ok(format!(
        "text-supplied kink residual {max:.2e} without the derivation modules"
    ))
}

fn main() {
    let criteria: [Criterion; 7] = [
        ("reduction identities", reductions),
        ("balance values", balances),
        ("power-transform identities", transforms),
        ("Boussinesq end to end", boussinesq_end_to_end),
        ("compatibility report", compatibility),
        ("property suites", properties),
        ("oracle independence", oracle_independence),
    ];
    let mut failed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        match run() {
            Ok(detail) => println!("PASS {} {name}: {detail}", k + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {} {name}: {why}", k + 1);
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
