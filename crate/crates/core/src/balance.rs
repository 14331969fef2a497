//! Homogeneous balance and the `U = V^p` power transform that turns a
//! fractional balance into an integer one.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::expr::{Expr, Node, Symbol};
use crate::pde::{PowerTransform, TravelingWaveOde};
use crate::poly::{to_ratfunc, Exponent, Poly};

/// `M = numer / denom`, each a linear form; `denom` has a positive leading
/// coefficient.
#[derive(Clone, Debug, PartialEq)]
pub struct Balance {
    pub numer: Exponent,
    pub denom: Exponent,
}

impl Balance {
    /// The value as a positive integer, if it is one identically.
    pub fn as_integer(&self) -> Option<i64> {
        let ratio = exact_ratio(&self.numer, &self.denom)?;
        if ratio.is_integer() {
            ratio.to_integer().to_i64()
        } else {
            None
        }
    }

    pub fn is_integer(&self) -> bool {
        self.as_integer().is_some()
    }

    pub fn to_expr(&self) -> Expr {
        self.numer.to_expr() / self.denom.to_expr()
    }

    /// The power-transform exponent `p = ±1/denom` that rescales a
    /// fractional `M = k/denom` to the integer `|k|`.
    pub fn suggested_transform(&self) -> Option<Expr> {
        if self.is_integer() {
            return None;
        }
        let k = self.numer.as_rational()?;
        let sign = if k.is_negative() { -1 } else { 1 };
        Some(Expr::int(sign) / self.denom.to_expr())
    }
}

impl fmt::Display for Balance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.as_integer() {
            Some(k) => write!(f, "{k}"),
            None => write!(f, "{}", self.to_expr()),
        }
    }
}

/// `a / b` as a rational constant when `a` is a constant multiple of `b`.
fn exact_ratio(a: &Exponent, b: &Exponent) -> Option<BigRational> {
    if b.is_zero() {
        return None;
    }
    let ratio = match b.linear_part().first() {
        Some((s, c)) => {
            let ac = a
                .linear_part()
                .iter()
                .find(|(t, _)| t == s)
                .map(|(_, v)| v.clone())
                .unwrap_or_else(BigRational::zero);
            ac / c
        }
        None => a.as_rational()? / b.constant_part(),
    };
    (b.scale(&ratio) == *a).then_some(ratio)
}

/// Degree of a term as `a·M + b`.
fn term_degree(term: &Expr, u: &Symbol, z: &Symbol) -> Result<Option<(Exponent, i64, bool)>> {
    let mut a = Exponent::int(0);
    let mut b = 0i64;
    let mut has_derivative = false;
    let mut touches = false;
    for f in term.factors() {
        let (base, exp) = match f.node() {
            Node::Pow(base, e) => (base.clone(), e.clone()),
            _ => (f.clone(), Expr::one()),
        };
        if !base.contains_symbol(u) {
            continue;
        }
        touches = true;
        let e = Exponent::from_expr(&exp)
            .ok_or_else(|| Error::Balance(format!("exponent of `{f}`")))?;
        match base.node() {
            Node::Sym(s) if s == u => a = a.add(&e),
            Node::Deriv(w, vs) if w.as_sym() == Some(u) && vs.len() == 1 && vs[0].0 == *z => {
                let k = i64::from(vs[0].1);
                let times = e
                    .as_integer()
                    .ok_or_else(|| Error::Balance(format!("non-integer power of `{base}`")))?;
                a = a.add(&e);
                b += k * times;
                has_derivative = true;
            }
            _ => return Err(Error::Balance(format!("unsupported factor `{f}`"))),
        }
    }
    Ok(touches.then_some((a, b, has_derivative)))
}

/// Generic numeric value of a linear form, used only to order terms.
fn generic_value(e: &Exponent) -> f64 {
    let mut v = e.constant_part().to_f64().unwrap_or(0.0);
    for (k, (_, c)) in e.linear_part().iter().enumerate() {
        // distinct, non-special values: 7/2, 9/2, ...
        v += c.to_f64().unwrap_or(0.0) * (3.5 + k as f64);
    }
    v
}

/// Balances the highest derivative term against the nonlinear terms of a
/// single-profile ODE.
pub fn compute_balance(ode: &TravelingWaveOde) -> Result<Balance> {
    ode.single()?;
    let eq = ode.expanded()?.remove(0);
    let u = ode.profile();
    let mut derivative_terms = Vec::new();
    let mut power_terms = Vec::new();
    for t in eq.terms() {
        if let Some((a, b, d)) = term_degree(&t, u, &ode.z)? {
            if d {
                derivative_terms.push((a, b));
            } else {
                power_terms.push((a, b));
            }
        }
    }
    let (da, db) = derivative_terms
        .into_iter()
        .max_by(|x, y| {
            x.1.cmp(&y.1)
                .then(generic_value(&x.0).total_cmp(&generic_value(&y.0)))
        })
        .ok_or_else(|| Error::Balance("no derivative term".into()))?;
    power_terms.sort_by(|x, y| generic_value(&y.0).total_cmp(&generic_value(&x.0)));
    if power_terms.is_empty() {
        return Err(Error::Balance(
            "no nonlinear term to balance against".into(),
        ));
    }
    for (pa, pb) in &power_terms {
        let denom = da.sub(pa);
        let numer = Exponent::int(pb - db);
        if denom.is_zero() {
            if numer.is_zero() {
                return Err(Error::Balance("degree equation is an identity".into()));
            }
            continue;
        }
        let lead_negative = match denom.linear_part().first() {
            Some((_, c)) => c.is_negative(),
            None => denom.constant_part().is_negative(),
        };
        let (numer, denom) = if lead_negative {
            (numer.neg(), denom.neg())
        } else {
            (numer, denom)
        };
        if let (Some(n), Some(d)) = (numer.as_rational(), denom.as_rational()) {
            if !(n / d).is_positive() {
                return Err(Error::Balance(format!("M = {} is not positive", n / d)));
            }
        }
        return Ok(Balance { numer, denom });
    }
    Err(Error::Balance("degree equation has no solution".into()))
}

/// `p = q / L` with `q` rational and `L` a linear form.
fn split_exponent(p: &Expr) -> Result<(BigRational, Exponent)> {
    if let Some(q) = p.as_rational() {
        return Ok((q.clone(), Exponent::int(1)));
    }
    let bad = || Error::Transform(format!("exponent `{p}` is not of the form q/(linear form)"));
    let mut q = BigRational::one();
    let mut l = None;
    for f in p.factors() {
        match f.node() {
            Node::Num(c) => q *= c.as_real().ok_or_else(bad)?,
            Node::Pow(base, e) if e.as_integer() == Some(-1) && l.is_none() => {
                l = Some(Exponent::from_expr(base).ok_or_else(bad)?);
            }
            _ => return Err(bad()),
        }
    }
    Ok((q, l.ok_or_else(bad)?))
}

fn exponent_poly(e: &Exponent) -> Poly {
    to_ratfunc(&e.to_expr())
        .expect("linear forms are polynomial")
        .num
}

/// `coef / L^lpow · V^(vexp/L) · Π (V^(j+1))^derivs[j]`
#[derive(Clone, Debug)]
struct VTerm {
    coef: Poly,
    lpow: u32,
    vexp: Exponent,
    derivs: Vec<u32>,
}

impl VTerm {
    fn differentiate(&self, l: &Exponent) -> Vec<VTerm> {
        let mut out = Vec::new();
        if !self.vexp.is_zero() {
            let mut derivs = self.derivs.clone();
            bump(&mut derivs, 0, 1);
            out.push(VTerm {
                coef: self.coef.mul(&exponent_poly(&self.vexp)),
                lpow: self.lpow + 1,
                vexp: self.vexp.sub(l),
                derivs,
            });
        }
        for (j, &d) in self.derivs.iter().enumerate() {
            if d == 0 {
                continue;
            }
            let mut derivs = self.derivs.clone();
            derivs[j] -= 1;
            bump(&mut derivs, j + 1, 1);
            out.push(VTerm {
                coef: self
                    .coef
                    .scale(&crate::number::GaussianRational::from_int(d.into())),
                lpow: self.lpow,
                vexp: self.vexp.clone(),
                derivs,
            });
        }
        out
    }
}

fn bump(v: &mut Vec<u32>, j: usize, by: u32) {
    if v.len() <= j {
        v.resize(j + 1, 0);
    }
    v[j] += by;
}

/// Dependent part of a term: `(power of U, derivative order)`.
fn term_shape(dep: &[Expr], u: &Symbol, z: &Symbol) -> Option<(Exponent, u32)> {
    let power = |e: &Expr| -> Option<Exponent> {
        match e.node() {
            Node::Sym(s) if s == u => Some(Exponent::int(1)),
            Node::Pow(b, k) if b.as_sym() == Some(u) => Exponent::from_expr(k),
            _ => None,
        }
    };
    match dep {
        [f] => match f.node() {
            Node::Deriv(w, vs) if vs.len() == 1 && vs[0].0 == *z => Some((power(w)?, vs[0].1)),
            _ => Some((power(f)?, 0)),
        },
        _ => None,
    }
}

/// Substitutes `U = V^p` into a single-profile ODE, applies the chain rule,
/// and multiplies through by the power of V (and of the denominator of p)
/// that leaves a polynomial in V and its derivatives.
pub fn power_transform(ode: &TravelingWaveOde, p: &Expr) -> Result<TravelingWaveOde> {
    let eq = ode.single()?.expand();
    let u = ode.profile().clone();
    let (q, l) = split_exponent(p)?;
    let l_poly = exponent_poly(&l);
    let v = Symbol::new(if u.name() == "V" { "W" } else { "V" });

    let mut terms: Vec<VTerm> = Vec::new();
    for t in eq.terms() {
        let (c, rest) = t.split_coeff();
        let (dep, constant): (Vec<Expr>, Vec<Expr>) = rest
            .factors()
            .into_iter()
            .partition(|f| f.contains_symbol(&u) || f.contains_symbol(&ode.z));
        let (k, order) = term_shape(&dep, &u, &ode.z)
            .ok_or_else(|| Error::Transform(format!("unsupported term shape `{t}`")))?;
        let coef = to_ratfunc(&(Expr::num(c) * Expr::product(constant)))?;
        if !coef.is_polynomial() {
            return Err(Error::Transform(format!("rational coefficient in `{t}`")));
        }
        let mut current = vec![VTerm {
            coef: coef.num,
            lpow: 0,
            vexp: k.scale(&q),
            derivs: Vec::new(),
        }];
        for _ in 0..order {
            current = current.iter().flat_map(|vt| vt.differentiate(&l)).collect();
        }
        terms.extend(current);
    }
    if terms.is_empty() {
        return Err(Error::Transform("equation is empty".into()));
    }

    // exponents relative to the first term must be integer multiples of L
    let base = terms[0].vexp.clone();
    let mut shifts = Vec::with_capacity(terms.len());
    for t in &terms {
        let diff = t.vexp.sub(&base);
        let k = if diff.is_zero() {
            Some(BigRational::zero())
        } else {
            exact_ratio(&diff, &l).filter(BigRational::is_integer)
        };
        let k = k.ok_or_else(|| {
            Error::Transform(format!("residual fractional power V^({}/({}))", t.vexp, l))
        })?;
        shifts.push(
            k.to_integer()
                .to_i64()
                .ok_or_else(|| Error::Transform("exponent overflow".into()))?,
        );
    }
    let kmin = *shifts.iter().min().unwrap();
    // base/L + kmin is the smallest exponent of V; it must become 0
    let lowest = base.add(&l.scale(&BigRational::from_integer(BigInt::from(kmin))));
    let maxm = terms.iter().map(|t| t.lpow).max().unwrap_or(0);

    let mut merged: BTreeMap<(i64, Vec<u32>), Poly> = BTreeMap::new();
    for (t, k) in terms.iter().zip(&shifts) {
        let mut derivs = t.derivs.clone();
        while derivs.last() == Some(&0) {
            derivs.pop();
        }
        let coef = t.coef.mul(&l_poly.pow(maxm - t.lpow));
        let slot = merged.entry((k - kmin, derivs)).or_default();
        *slot = slot.add(&coef);
    }
    let vexpr = Expr::symbol(&v);
    let mut parts = Vec::new();
    for ((k, derivs), coef) in merged {
        if coef.is_zero() {
            continue;
        }
        let mut factors = vec![coef.to_expr(), Expr::powi(vexpr.clone(), k)];
        for (j, d) in derivs.iter().enumerate() {
            let marker = Expr::deriv(vexpr.clone(), &[(ode.z.clone(), j as u32 + 1)]);
            factors.push(Expr::powi(marker, i64::from(*d)));
        }
        parts.push(Expr::product(factors));
    }
    let equation = Expr::sum(parts).expand();
    let clearing = (lowest.neg().to_expr() / l.to_expr()).expand();
    Ok(TravelingWaveOde {
        profiles: vec![v.clone()],
        equations: vec![equation],
        transform: Some(PowerTransform {
            p: p.clone(),
            new_profile: v,
            old_profile: u,
            clearing,
            scale: Expr::powi(l.to_expr(), i64::from(maxm)),
        }),
        ..ode.clone()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{parse_expr, Scope};
    use crate::number::GaussianRational;
    use crate::pde::WaveSpec;
    use crate::poly::poly_zero_check;

    fn ode(text: &str) -> TravelingWaveOde {
        TravelingWaveOde {
            z: Symbol::new("z"),
            profiles: vec![Symbol::new("U")],
            params: Vec::new(),
            equations: vec![parse_expr(text, &Scope::open()).unwrap()],
            wave: WaveSpec {
                sign: -1,
                speed: Symbol::new("c"),
            },
            factors: vec![GaussianRational::one()],
            constants: None,
            elimination: None,
            transform: None,
        }
    }

    fn p(text: &str) -> Expr {
        parse_expr(text, &Scope::open()).unwrap()
    }

    #[test]
    fn integer_balances() {
        let b = compute_balance(&ode("D(U, z, z) + U^3/2 + U^2 + U")).unwrap();
        assert_eq!(b.as_integer(), Some(1));
        let b = compute_balance(&ode("U^3 - U^2 + U*D(U, z, z) + D(U, z)^2")).unwrap();
        assert_eq!(b.as_integer(), Some(2));
    }

    #[test]
    fn symbolic_balances() {
        let b = compute_balance(&ode("(alpha - c)*U - lambda*U^n + beta*c*D(U^n, z, z)")).unwrap();
        assert!(poly_zero_check(&(b.to_expr() - p("-2/(n - 1)")), &[]).unwrap());
        assert!(!b.is_integer());
        assert!(
            poly_zero_check(&(b.suggested_transform().unwrap() - p("-1/(n - 1)")), &[]).unwrap()
        );
        let b = compute_balance(&ode("-lambda*U + beta*U^n + (alpha - c^2)*D(U, z, z)")).unwrap();
        assert!(poly_zero_check(&(b.to_expr() - p("2/(n - 1)")), &[]).unwrap());
        let lin = |text: &str| Exponent::from_expr(&p(text)).unwrap();
        let two = Balance {
            numer: lin("2*n - 2"),
            denom: lin("n - 1"),
        };
        assert_eq!(two.as_integer(), Some(2));
    }

    #[test]
    fn balance_errors() {
        assert!(matches!(
            compute_balance(&ode("U^3 + U")),
            Err(Error::Balance(_))
        ));
        // U'' against U gives M + 2 = M
        assert!(matches!(
            compute_balance(&ode("D(U, z, z) + U")),
            Err(Error::Balance(_))
        ));
        // U'' against 1/U gives M = -1
        assert!(matches!(
            compute_balance(&ode("D(U, z, z) + U^(-1)")),
            Err(Error::Balance(_))
        ));
    }

    #[test]
    fn reciprocal_transform_at_n_two() {
        let src = ode("(alpha - c)*U - lambda*U^2 + beta*c*D(U^2, z, z)");
        let out = power_transform(&src, &p("-1")).unwrap();
        let want = p("(alpha - c)*V^3 - lambda*V^2 - 2*beta*c*V*D(V, z, z) + 6*beta*c*D(V, z)^2");
        assert!(poly_zero_check(&(&out.equations[0] - &want), &[]).unwrap());
    }

    #[test]
    fn rejects_fractional_residue() {
        let src = ode("U + U^2 + D(U, z, z)");
        assert!(matches!(
            power_transform(&src, &p("1/2")),
            Err(Error::Transform(_))
        ));
    }
}
