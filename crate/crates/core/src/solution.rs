//! Closed-form traveling waves from verified candidates.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::Serialize;

use crate::algsolve::{numeric_residuals, verify_candidate, Candidate};
use crate::error::{Error, Result};
use crate::expr::{Bindings, Expr, Func, Symbol};
use crate::meda::AlgebraicSystem;
use crate::number::GaussianRational;
use crate::pde::{PdeProblem, TravelingWaveOde};
use crate::poly::poly_zero_check;

/// Which solution of `φ' = b + φ²` to use.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    Tanh,
    Coth,
    Tan,
    Cot,
    Rational,
}

impl Branch {
    pub const ALL: [Branch; 5] = [
        Branch::Tanh,
        Branch::Coth,
        Branch::Tan,
        Branch::Cot,
        Branch::Rational,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Branch::Tanh => "tanh",
            Branch::Coth => "coth",
            Branch::Tan => "tan",
            Branch::Cot => "cot",
            Branch::Rational => "rational",
        }
    }
}

impl fmt::Display for Branch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Branch {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Branch::ALL
            .into_iter()
            .find(|b| b.name() == s)
            .ok_or_else(|| Error::Branch(format!("unknown branch `{s}`")))
    }
}

/// φ(z) on the requested branch; radicals stay symbolic.
pub fn build_phi(b: &Expr, branch: Branch, z: &Symbol) -> Result<Expr> {
    let z = Expr::symbol(z);
    let neg = Expr::sqrt(-b.clone());
    let pos = Expr::sqrt(b.clone());
    Ok(match branch {
        Branch::Tanh => -(&neg * &Expr::func(Func::Tanh, &neg * &z)),
        Branch::Coth => -(&neg * &Expr::func(Func::Coth, &neg * &z)),
        Branch::Tan => &pos * &Expr::func(Func::Tan, &pos * &z),
        Branch::Cot => -(&pos * &Expr::func(Func::Cot, &pos * &z)),
        Branch::Rational => {
            if !poly_zero_check(b, &[])? {
                return Err(Error::Branch(format!(
                    "the rational branch needs b = 0, got b = {b}"
                )));
            }
            -Expr::recip(z)
        }
    })
}

/// A candidate that has passed verification against a system.
#[derive(Clone, Debug)]
pub struct VerifiedCandidate(Candidate);

impl VerifiedCandidate {
    /// Exact check; refuses a candidate with any nonzero residual.
    pub fn new(system: &AlgebraicSystem, cand: Candidate) -> Result<Self> {
        if !cand.numeric.is_empty() {
            return Err(Error::Unverified(format!(
                "{} has numeric values; use from_numeric",
                cand.source
            )));
        }
        if verify_candidate(system, &cand)?.pass {
            Ok(VerifiedCandidate(cand))
        } else {
            Err(Error::Unverified(cand.source))
        }
    }

    /// Numeric check at fixed parameter values.
    pub fn from_numeric(
        system: &AlgebraicSystem,
        cand: Candidate,
        params: &Bindings,
        tol: f64,
    ) -> Result<Self> {
        let mut values = params.clone();
        values.extend(cand.instantiate(params)?);
        let ok = numeric_residuals(system, &values)?.iter().all(|r| *r < tol);
        if ok {
            Ok(VerifiedCandidate(cand))
        } else {
            Err(Error::Unverified(cand.source))
        }
    }

    pub fn candidate(&self) -> &Candidate {
        &self.0
    }

    /// Exact bindings, numeric values included as exact binary fractions.
    fn bindings(&self) -> BTreeMap<Symbol, Expr> {
        let mut out = self.0.resolved();
        for (k, v) in &self.0.numeric {
            let exact = GaussianRational::from_complex64(Complex64::new(v.re, v.im))
                .unwrap_or_else(GaussianRational::zero);
            out.insert(k.clone(), Expr::num(exact));
        }
        out
    }
}

#[derive(Clone, Debug)]
pub struct ClosedFormSolution {
    pub branch: Branch,
    pub source: String,
    pub z: Symbol,
    /// Profiles of the original unknowns as functions of z.
    pub profiles_z: Vec<(Symbol, Expr)>,
    /// The unknowns as functions of x and t.
    pub fields: Vec<(Symbol, Expr)>,
    pub speed: Expr,
    pub transform: Option<Expr>,
}

impl ClosedFormSolution {
    pub fn fields(&self) -> &[(Symbol, Expr)] {
        &self.fields
    }

    pub fn to_json(&self) -> serde_json::Value {
        let render = |v: &[(Symbol, Expr)]| -> BTreeMap<String, String> {
            v.iter()
                .map(|(k, e)| (k.name().to_string(), e.to_string()))
                .collect()
        };
        serde_json::json!({
            "branch": self.branch,
            "source": self.source,
            "speed": self.speed.to_string(),
            "transform": self.transform.as_ref().map(Expr::to_string),
            "profiles": render(&self.profiles_z),
            "fields": render(&self.fields),
        })
    }
}

/// Builds u(x,t) (and v for an eliminated system) from a verified candidate.
///
/// `ode` is the equation the system was derived from (after any power
/// transform); its transform and elimination records are undone here.
pub fn assemble(
    problem: &PdeProblem,
    ode: &TravelingWaveOde,
    system: &AlgebraicSystem,
    cand: &VerifiedCandidate,
    branch: Branch,
) -> Result<ClosedFormSolution> {
    let ansatz = &system.ansatz;
    let bindings = cand.bindings();
    let b_value = bindings
        .get(&ansatz.riccati)
        .cloned()
        .unwrap_or_else(|| Expr::symbol(&ansatz.riccati));
    let phi = build_phi(&b_value, branch, &ode.z)?;

    if poly_zero_check(&phi, &[])? {
        let negative_used = ansatz.b.iter().any(|s| match bindings.get(s) {
            Some(v) => !v.is_zero(),
            None => true,
        });
        if negative_used {
            return Err(Error::DivisionByZero(format!(
                "φ vanishes on the {branch} branch with b = {b_value}"
            )));
        }
    }
    let expansion = ansatz.expansion().substitute(&bindings);
    let profile = expansion.substitute(&BTreeMap::from([(ansatz.phi.clone(), phi)]));

    let (u_z, transform) = match &ode.transform {
        Some(t) => (Expr::pow(profile, t.p.clone()), Some(t.p.clone())),
        None => (profile, None),
    };
    let main = match &ode.transform {
        Some(t) => t.old_profile.clone(),
        None => ode.profile().clone(),
    };
    let mut profiles_z = vec![(main.clone(), u_z.clone())];
    if let Some(el) = &ode.elimination {
        let v = el
            .expr
            .substitute(&BTreeMap::from([(main.clone(), u_z.clone())]));
        let v = v.substitute(&bindings);
        profiles_z.push((el.var.clone(), v));
    }

    let speed = bindings
        .get(&ode.wave.speed)
        .cloned()
        .unwrap_or_else(|| Expr::symbol(&ode.wave.speed));
    let mut wave = problem.wave.clone();
    wave.speed = ode.wave.speed.clone();
    let z_xt = wave
        .z_expr(&problem.x, &problem.t)
        .substitute(&BTreeMap::from([(ode.wave.speed.clone(), speed.clone())]));

    let names = problem.profiles();
    let mut fields = Vec::new();
    for (profile, e) in &profiles_z {
        let k = names
            .iter()
            .position(|n| n == profile)
            .ok_or_else(|| Error::Candidate(format!("profile `{profile}` has no unknown")))?;
        let field = e.substitute(&BTreeMap::from([(ode.z.clone(), z_xt.clone())]));
        fields.push((problem.unknowns[k].clone(), field));
    }
    fields.sort_by_key(|(u, _)| problem.unknowns.iter().position(|w| w == u));

    let mut allowed: BTreeSet<Symbol> = problem.params.iter().cloned().collect();
    allowed.extend(cand.candidate().arbitrary.iter().cloned());
    allowed.insert(problem.x.clone());
    allowed.insert(problem.t.clone());
    for (u, f) in &fields {
        if let Some(s) = f.free_symbols().into_iter().find(|s| !allowed.contains(s)) {
            return Err(Error::Candidate(format!("`{s}` left unbound in {u}(x,t)")));
        }
    }

    Ok(ClosedFormSolution {
        branch,
        source: cand.candidate().source.clone(),
        z: ode.z.clone(),
        profiles_z,
        fields,
        speed,
        transform,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{parse_expr, Scope};

    fn p(text: &str) -> Expr {
        parse_expr(text, &Scope::open()).unwrap()
    }

    #[test]
    fn branch_formulas() {
        let z = Symbol::new("z");
        assert_eq!(
            build_phi(&Expr::int(-1), Branch::Tanh, &z).unwrap(),
            p("-tanh(z)")
        );
        assert_eq!(
            build_phi(&Expr::zero(), Branch::Rational, &z).unwrap(),
            p("-1/z")
        );
        assert_eq!(
            build_phi(&Expr::rational(1, 4), Branch::Tan, &z).unwrap(),
            p("1/2*tan(z/2)")
        );
        assert!(matches!(
            build_phi(&Expr::one(), Branch::Rational, &z),
            Err(Error::Branch(_))
        ));
        assert_eq!("coth".parse::<Branch>().unwrap(), Branch::Coth);
        assert!("sec".parse::<Branch>().is_err());
    }
}
