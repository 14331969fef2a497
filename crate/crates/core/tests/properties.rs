mod common;

use std::collections::BTreeMap;

use num_complex::Complex64;
use proptest::prelude::*;

use common::*;
use meda::expr::{eval_complex, parse_expr, Bindings, Expr, Scope, Symbol};
use meda::pde::PdeProblem;
use meda::solution::{build_phi, Branch};

proptest! {
    #![proptest_config(ProptestConfig { cases: 200, max_global_rejects: 10_000, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn derivative_matches_finite_differences(e in expr_in_x(), re in -1.0f64..1.0, im in 0.1f64..1.0) {
        check_diff(&e, (re, im))?;
    }

    #[test]
    fn rewrite_rule_follows_phi_trajectories(
        m in 1i64..=2,
        coeffs in prop::collection::vec(-2.0f64..2.0, 5),
        b in -1.0f64..1.0,
        phi0 in 0.5f64..1.5,
    ) {
        check_rewrite(m, &coeffs, b, phi0)?;
    }

    #[test]
    fn zero_check_is_sound((e, _) in zero_check_case(), a in 0.3f64..1.5, b in 0.3f64..1.5, n in 0.5f64..2.5) {
        check_zero(&e, (a, b, n))?;
    }

    #[test]
    fn integration_inverts_differentiation(ode in integrable_ode()) {
        check_integrate(&ode)?;
    }

    #[test]
    fn canonical_form_is_idempotent(e in expr_in_x()) {
        let once = e.expand();
        prop_assert_eq!(once.expand(), once.clone());
        let reparsed = parse_expr(&e.to_string(), &Scope::open()).unwrap();
        prop_assert_eq!(reparsed, e);
    }

    #[test]
    fn tanh_and_tan_branches_agree(b in -2.0f64..-0.1, re in -1.0f64..1.0, im in -1.0f64..1.0) {
        let z = Symbol::new("z");
        let b = Expr::num(meda::number::GaussianRational::from_complex64(Complex64::new(b, 0.0)).unwrap());
        let tanh = build_phi(&b, Branch::Tanh, &z).unwrap();
        let tan = build_phi(&b, Branch::Tan, &z).unwrap();
        let at = Bindings::from([(z, Complex64::new(re, im))]);
        if let (Ok(u), Ok(v)) = (eval_complex(&tanh, &at), eval_complex(&tan, &at)) {
            prop_assert!((u - v).norm() <= 1e-9 * u.norm().max(1.0), "{u} vs {v}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 4, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn solver_is_deterministic(seed in any::<u64>()) {
        check_solve_determinism(&boussinesq_system(), seed)?;
    }

    #[test]
    fn instantiation_matches_exact_substitution(num in -9i64..=9, den in 1i64..=5) {
        prop_assume!(num != 0);
        check_instantiation(&boussinesq_system(), (num, den))?;
    }
}

#[test]
fn problem_files_round_trip_through_reduction() {
    for name in ["rlw.meda", "phi4.meda", "boussinesq.meda"] {
        let problem = PdeProblem::from_file(fixtures().join(name)).unwrap();
        let ode = meda::pde::reduce_to_ode(&problem).unwrap();
        assert_eq!(ode.equations.len(), problem.equations.len());
        let values: BTreeMap<Symbol, Expr> = problem
            .params
            .iter()
            .map(|s| (s.clone(), Expr::int(2)))
            .collect();
        for e in &ode.equations {
            assert!(e
                .substitute(&values)
                .free_symbols()
                .iter()
                .all(|s| s.name() == "z" || ode.profiles.contains(s)));
        }
    }
}
