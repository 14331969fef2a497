//! The expansion `U = a0 + Σ (a_j φ^j + b_j φ^-j)` with `φ' = b + φ²`, and
//! extraction of the algebraic system from the vanishing φ-coefficients.

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::expr::{Expr, Node, Symbol};
use crate::number::GaussianRational;
use crate::pde::TravelingWaveOde;
use crate::poly::{to_ratfunc, Exponent, Monomial, Poly, PolyForm};

#[derive(Clone, Debug)]
pub struct Ansatz {
    pub m: u32,
    /// `a0, a1, …, aM`
    pub a: Vec<Symbol>,
    /// `b1, …, bM`
    pub b: Vec<Symbol>,
    /// The Riccati parameter in `φ' = b + φ²`.
    pub riccati: Symbol,
    pub phi: Symbol,
}

impl Ansatz {
    pub fn new(m: i64) -> Result<Self> {
        if m < 1 {
            return Err(Error::Ansatz(format!(
                "M must be a positive integer, got {m}"
            )));
        }
        let m = u32::try_from(m).map_err(|_| Error::Ansatz("M too large".into()))?;
        Ok(Ansatz {
            m,
            a: (0..=m).map(|j| Symbol::new(&format!("a{j}"))).collect(),
            b: (1..=m).map(|j| Symbol::new(&format!("b{j}"))).collect(),
            riccati: Symbol::new("b"),
            phi: Symbol::new("phi"),
        })
    }

    /// Coefficient unknowns followed by `b`.
    pub fn unknowns(&self) -> Vec<Symbol> {
        self.a
            .iter()
            .chain(&self.b)
            .cloned()
            .chain([self.riccati.clone()])
            .collect()
    }

    pub fn poly(&self) -> Poly {
        let phi = Expr::symbol(&self.phi);
        let mut p = Poly::symbol(&self.a[0]);
        for j in 1..=self.m as usize {
            let up = Poly::atom(phi.clone(), Exponent::int(j as i64));
            let down = Poly::atom(phi.clone(), Exponent::int(-(j as i64)));
            p = p
                .add(&Poly::symbol(&self.a[j]).mul(&up))
                .add(&Poly::symbol(&self.b[j - 1]).mul(&down));
        }
        p
    }

    pub fn expansion(&self) -> Expr {
        self.poly().to_expr()
    }

    /// z-derivative of a Laurent polynomial in φ under `φ' = b + φ²`.
    pub fn derivative(&self, p: &Poly) -> Poly {
        phi_derivative(p, &self.phi, &self.riccati)
    }
}

/// `d/dz Σ c·φ^m = Σ c·m·φ^(m-1)·(b + φ²)`; coefficients are constant in z.
pub fn phi_derivative(p: &Poly, phi: &Symbol, b: &Symbol) -> Poly {
    let atom = Expr::symbol(phi);
    let riccati = Poly::symbol(b).add(&Poly::atom(atom.clone(), Exponent::int(2)));
    let mut out = Poly::zero();
    for (mono, c) in p.terms() {
        let m = mono
            .exponent_of(&atom)
            .and_then(Exponent::as_integer)
            .unwrap_or(0);
        if m == 0 {
            continue;
        }
        let lowered = mono
            .without(&atom)
            .mul(&Monomial::atom(atom.clone(), Exponent::int(m - 1)));
        let term = Poly::term(lowered, c * &GaussianRational::from_int(m));
        out = out.add(&term.mul(&riccati));
    }
    out
}

#[derive(Clone, Debug, Serialize)]
pub struct SystemEquation {
    /// φ-power of this coefficient before clearing negative powers.
    pub power: i64,
    #[serde(serialize_with = "serialize_poly")]
    pub poly: Poly,
}

fn serialize_poly<S: serde::Serializer>(p: &Poly, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&p.render())
}

#[derive(Clone, Debug)]
pub struct AlgebraicSystem {
    pub ansatz: Ansatz,
    pub unknowns: Vec<Symbol>,
    pub params: Vec<Symbol>,
    pub equations: Vec<SystemEquation>,
    /// φ-powers whose coefficient vanished identically.
    pub dropped: Vec<i64>,
    /// The expansion was multiplied by `φ^clearing`.
    pub clearing: i64,
}

impl AlgebraicSystem {
    pub fn len(&self) -> usize {
        self.equations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.equations.is_empty()
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "M": self.ansatz.m,
            "unknowns": self.unknowns.iter().map(Symbol::name).collect::<Vec<_>>(),
            "params": self.params.iter().map(Symbol::name).collect::<Vec<_>>(),
            "clearing": self.clearing,
            "dropped": self.dropped,
            "equations": self.equations.iter().map(|e| serde_json::json!({
                "power": e.power,
                "equation": e.poly.render(),
            })).collect::<Vec<_>>(),
        })
    }
}

impl fmt::Display for AlgebraicSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for e in &self.equations {
            writeln!(f, "phi^{}: {} = 0", e.power, e.poly.render())?;
        }
        Ok(())
    }
}

/// Substitutes the expansion into a single-profile ODE; returns the Laurent
/// polynomial in φ (before clearing).
pub fn substitute_ansatz(ode: &TravelingWaveOde, ansatz: &Ansatz) -> Result<Poly> {
    ode.single()?;
    let eq = ode.expanded()?.remove(0);
    let u = ode.profile();
    let form = to_ratfunc(&eq)?;
    if !form.is_polynomial() {
        return Err(Error::NonPolynomial(format!(
            "equation has a denominator: {eq}"
        )));
    }

    let mut derivs = vec![ansatz.poly()];
    let mut images: BTreeMap<Expr, Poly> = BTreeMap::new();
    images.insert(Expr::symbol(u), derivs[0].clone());
    let mut result = Poly::zero();
    for (mono, c) in form.num.terms() {
        let mut term = Poly::term(Monomial::one(), c.clone());
        for (atom, e) in mono.factors() {
            if !atom.contains_symbol(u) {
                term = term.mul_monomial(
                    &Monomial::atom(atom.clone(), e.clone()),
                    &GaussianRational::one(),
                );
                continue;
            }
            let k = e
                .as_integer()
                .filter(|k| *k >= 0)
                .ok_or_else(|| Error::NonPolynomial(format!("{atom}^({e})")))?;
            let image = match images.get(atom) {
                Some(p) => p.clone(),
                None => {
                    let order = match atom.node() {
                        Node::Deriv(w, vs)
                            if w.as_sym() == Some(u) && vs.len() == 1 && vs[0].0 == ode.z =>
                        {
                            vs[0].1
                        }
                        _ => return Err(Error::NonPolynomial(atom.to_string())),
                    };
                    while derivs.len() <= order as usize {
                        let next = ansatz.derivative(derivs.last().unwrap());
                        derivs.push(next);
                    }
                    let p = derivs[order as usize].clone();
                    images.insert(atom.clone(), p.clone());
                    p
                }
            };
            term = term.mul(&image.pow(k as u32));
        }
        result = result.add(&term);
    }
    Ok(result)
}

/// One equation per φ-power of the cleared expansion.
pub fn extract_system(
    laurent: &Poly,
    ansatz: &Ansatz,
    ode: &TravelingWaveOde,
) -> Result<AlgebraicSystem> {
    let form = PolyForm::new(std::slice::from_ref(&ansatz.phi), laurent.clone())?;
    let coefficients = form.coefficients();
    let lo = coefficients.keys().map(|k| k[0]).min().unwrap_or(0);
    let hi = coefficients.keys().map(|k| k[0]).max().unwrap_or(0);
    let clearing = (-lo).max(0);
    let mut equations = Vec::new();
    let mut dropped = Vec::new();
    for j in lo..=hi {
        match coefficients.get(&vec![j]) {
            Some(p) if !p.is_zero() => equations.push(SystemEquation {
                power: j,
                poly: p.clone(),
            }),
            _ => dropped.push(j),
        }
    }
    let speed = &ode.wave.speed;
    let mut unknowns = ansatz.unknowns();
    let mentions_speed = equations
        .iter()
        .any(|e| e.poly.to_expr().contains_symbol(speed));
    if mentions_speed {
        unknowns.push(speed.clone());
    }
    let params = ode.params.iter().filter(|s| *s != speed).cloned().collect();
    Ok(AlgebraicSystem {
        ansatz: ansatz.clone(),
        unknowns,
        params,
        equations,
        dropped,
        clearing,
    })
}

/// Expansion, substitution and extraction in one step.
pub fn derive_system(ode: &TravelingWaveOde, m: i64) -> Result<AlgebraicSystem> {
    let ansatz = Ansatz::new(m)?;
    let laurent = substitute_ansatz(ode, &ansatz)?;
    extract_system(&laurent, &ansatz, ode)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{parse_expr, Scope};
    use crate::pde::WaveSpec;
    use crate::poly::poly_zero_check;

    fn p(text: &str) -> Expr {
        parse_expr(text, &Scope::open()).unwrap()
    }

    fn poly(text: &str) -> Poly {
        to_ratfunc(&p(text)).unwrap().num
    }

    fn eq29() -> TravelingWaveOde {
        TravelingWaveOde {
            z: Symbol::new("z"),
            profiles: vec![Symbol::new("U")],
            params: vec![Symbol::new("lambda")],
            equations: vec![p("D(U, z, z) + U^3/2 + 3/2*lambda*U^2 + lambda^2*U")],
            wave: WaveSpec {
                sign: 1,
                speed: Symbol::new("lambda"),
            },
            factors: vec![GaussianRational::one()],
            constants: None,
            elimination: None,
            transform: None,
        }
    }

    #[test]
    fn ansatz_shapes() {
        let a = Ansatz::new(1).unwrap();
        assert!(poly_zero_check(&(a.expansion() - p("a0 + a1*phi + b1/phi")), &[]).unwrap());
        let a = Ansatz::new(2).unwrap();
        assert!(poly_zero_check(
            &(a.expansion() - p("a0 + a1*phi + a2*phi^2 + b1/phi + b2/phi^2")),
            &[]
        )
        .unwrap());
        assert_eq!(a.unknowns().len(), 6);
        assert!(matches!(Ansatz::new(0), Err(Error::Ansatz(_))));
    }

    #[test]
    fn rewrite_rule() {
        let (phi, b) = (Symbol::new("phi"), Symbol::new("b"));
        let d1 = phi_derivative(&poly("a0 + a1*phi"), &phi, &b);
        assert_eq!(d1, poly("a1*b + a1*phi^2"));
        let d2 = phi_derivative(&d1, &phi, &b);
        assert_eq!(d2, poly("2*a1*b*phi + 2*a1*phi^3"));
        assert_eq!(
            phi_derivative(&poly("b1/phi"), &phi, &b),
            poly("-b1*b/phi^2 - b1")
        );
    }

    #[test]
    fn boussinesq_coefficients() {
        let sys = derive_system(&eq29(), 1).unwrap();
        assert_eq!(sys.len(), 7);
        assert_eq!(sys.clearing, 3);
        assert_eq!(sys.unknowns.last().unwrap().name(), "lambda");
        let coeff = |j: i64| {
            sys.equations
                .iter()
                .find(|e| e.power == j)
                .unwrap()
                .poly
                .clone()
        };
        let zero_b1 = |q: Poly| {
            let e = q
                .to_expr()
                .substitute(&BTreeMap::from([(Symbol::new("b1"), Expr::zero())]));
            to_ratfunc(&e).unwrap().num
        };
        assert_eq!(zero_b1(coeff(3)), poly("2*a1 + a1^3/2"));
        assert_eq!(zero_b1(coeff(2)), poly("3/2*a0*a1^2 + 3/2*lambda*a1^2"));
        assert_eq!(
            zero_b1(coeff(1)),
            poly("2*a1*b + 3/2*a0^2*a1 + 3*lambda*a0*a1 + lambda^2*a1")
        );
    }
}
