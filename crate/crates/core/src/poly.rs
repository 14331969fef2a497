//! Expanded normal forms used for exact identity checks.
//!
//! A [`Poly`] is a finite sum of Gaussian-rational multiples of monomials.
//! A monomial is a product of atoms raised to exponents, where an atom is a
//! symbol, a derivative marker, a function application, or a compound base
//! carrying a non-integer exponent (a radical). Exponents are linear forms
//! over symbols with rational coefficients, which covers `U^(n - 1)` and
//! negative (Laurent) powers alike.
//!
//! [`RatFunc`] adds a factored denominator so rational expressions can be
//! tested for identical vanishing by clearing denominators.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::expr::{Expr, Node, Symbol};
use crate::number::GaussianRational;

/// `constant + Σ coeff·symbol`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Exponent {
    constant: BigRational,
    linear: Vec<(Symbol, BigRational)>,
}

impl Exponent {
    pub fn int(k: i64) -> Self {
        Self::constant(BigRational::from_integer(BigInt::from(k)))
    }

    pub fn constant(c: BigRational) -> Self {
        Exponent {
            constant: c,
            linear: Vec::new(),
        }
    }

    pub fn symbol(s: &Symbol) -> Self {
        Exponent {
            constant: BigRational::zero(),
            linear: vec![(s.clone(), BigRational::one())],
        }
    }

    /// Reads an exponent expression; `None` when it is not a real linear form.
    pub fn from_expr(e: &Expr) -> Option<Self> {
        match e.node() {
            Node::Num(c) => Some(Self::constant(c.as_real()?.clone())),
            Node::Sym(s) => Some(Self::symbol(s)),
            Node::Add(ts) => {
                let mut acc = Self::int(0);
                for t in ts {
                    acc = acc.add(&Self::from_expr(t)?);
                }
                Some(acc)
            }
            Node::Mul(fs) if fs.len() == 2 => {
                let c = fs[0].as_rational()?;
                let s = fs[1].as_sym()?;
                Some(Exponent {
                    constant: BigRational::zero(),
                    linear: vec![(s.clone(), c.clone())],
                })
            }
            _ => None,
        }
    }

    pub fn to_expr(&self) -> Expr {
        let mut terms = vec![Expr::num(GaussianRational::real(self.constant.clone()))];
        for (s, c) in &self.linear {
            terms.push(Expr::num(GaussianRational::real(c.clone())) * Expr::symbol(s));
        }
        Expr::sum(terms)
    }

    pub fn is_zero(&self) -> bool {
        self.linear.is_empty() && self.constant.is_zero()
    }

    pub fn is_constant(&self) -> bool {
        self.linear.is_empty()
    }

    pub fn as_rational(&self) -> Option<&BigRational> {
        self.linear.is_empty().then_some(&self.constant)
    }

    pub fn as_integer(&self) -> Option<i64> {
        let c = self.as_rational()?;
        if c.is_integer() {
            c.to_integer().to_i64()
        } else {
            None
        }
    }

    pub fn constant_part(&self) -> &BigRational {
        &self.constant
    }

    pub fn linear_part(&self) -> &[(Symbol, BigRational)] {
        &self.linear
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut map: BTreeMap<Symbol, BigRational> = self.linear.iter().cloned().collect();
        for (s, c) in &other.linear {
            let slot = map.entry(s.clone()).or_insert_with(BigRational::zero);
            *slot = &*slot + c;
        }
        Exponent {
            constant: &self.constant + &other.constant,
            linear: map.into_iter().filter(|(_, c)| !c.is_zero()).collect(),
        }
    }

    pub fn scale(&self, k: &BigRational) -> Self {
        if k.is_zero() {
            return Self::int(0);
        }
        Exponent {
            constant: &self.constant * k,
            linear: self
                .linear
                .iter()
                .map(|(s, c)| (s.clone(), c * k))
                .collect(),
        }
    }

    pub fn neg(&self) -> Self {
        self.scale(&-BigRational::one())
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_expr())
    }
}

/// Product of atoms with nonzero exponents, sorted by atom.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Monomial(Vec<(Expr, Exponent)>);

impl Monomial {
    pub fn one() -> Self {
        Monomial(Vec::new())
    }

    pub fn atom(a: Expr, e: Exponent) -> Self {
        if e.is_zero() {
            Monomial::one()
        } else {
            Monomial(vec![(a, e)])
        }
    }

    pub fn factors(&self) -> &[(Expr, Exponent)] {
        &self.0
    }

    pub fn is_one(&self) -> bool {
        self.0.is_empty()
    }

    pub fn exponent_of(&self, atom: &Expr) -> Option<&Exponent> {
        self.0.iter().find(|(a, _)| a == atom).map(|(_, e)| e)
    }

    /// This monomial with `atom` removed.
    pub fn without(&self, atom: &Expr) -> Monomial {
        Monomial(self.0.iter().filter(|(a, _)| a != atom).cloned().collect())
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        let mut out = Vec::with_capacity(self.0.len() + other.0.len());
        let (mut i, mut j) = (0, 0);
        while i < self.0.len() && j < other.0.len() {
            match self.0[i].0.cmp(&other.0[j].0) {
                std::cmp::Ordering::Less => {
                    out.push(self.0[i].clone());
                    i += 1;
                }
                std::cmp::Ordering::Greater => {
                    out.push(other.0[j].clone());
                    j += 1;
                }
                std::cmp::Ordering::Equal => {
                    let e = self.0[i].1.add(&other.0[j].1);
                    if !e.is_zero() {
                        out.push((self.0[i].0.clone(), e));
                    }
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&self.0[i..]);
        out.extend_from_slice(&other.0[j..]);
        Monomial(out)
    }

    pub fn pow(&self, k: &BigRational) -> Monomial {
        if k.is_zero() {
            return Monomial::one();
        }
        Monomial(
            self.0
                .iter()
                .map(|(a, e)| (a.clone(), e.scale(k)))
                .collect(),
        )
    }

    pub fn inv(&self) -> Monomial {
        self.pow(&-BigRational::one())
    }

    /// Sum of the integer exponents; used only for display ordering.
    pub fn degree(&self) -> i64 {
        self.0.iter().filter_map(|(_, e)| e.as_integer()).sum()
    }

    pub fn to_expr(&self) -> Expr {
        Expr::product(
            self.0
                .iter()
                .map(|(a, e)| Expr::pow(a.clone(), e.to_expr())),
        )
    }
}

/// Sparse multivariate Laurent polynomial with Gaussian-rational
/// coefficients; never stores zero coefficients.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Poly {
    terms: BTreeMap<Monomial, GaussianRational>,
}

impl Poly {
    pub fn zero() -> Self {
        Poly::default()
    }

    pub fn one() -> Self {
        Poly::constant(GaussianRational::one())
    }

    pub fn constant(c: GaussianRational) -> Self {
        Poly::term(Monomial::one(), c)
    }

    pub fn term(m: Monomial, c: GaussianRational) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(m, c);
        }
        Poly { terms }
    }

    pub fn atom(a: Expr, e: Exponent) -> Self {
        Poly::term(Monomial::atom(a, e), GaussianRational::one())
    }

    pub fn symbol(s: &Symbol) -> Self {
        Poly::atom(Expr::symbol(s), Exponent::int(1))
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &GaussianRational)> {
        self.terms.iter()
    }

    pub fn as_constant(&self) -> Option<GaussianRational> {
        match self.terms.len() {
            0 => Some(GaussianRational::zero()),
            1 => {
                let (m, c) = self.terms.iter().next().unwrap();
                m.is_one().then(|| c.clone())
            }
            _ => None,
        }
    }

    pub fn as_monomial(&self) -> Option<(&Monomial, &GaussianRational)> {
        if self.terms.len() == 1 {
            self.terms.iter().next()
        } else {
            None
        }
    }

    fn add_term(&mut self, m: Monomial, c: GaussianRational) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(m) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                let s = o.get() + &c;
                if s.is_zero() {
                    o.remove();
                } else {
                    *o.get_mut() = s;
                }
            }
        }
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Poly {
        self.scale(&-GaussianRational::one())
    }

    pub fn scale(&self, k: &GaussianRational) -> Poly {
        if k.is_zero() {
            return Poly::zero();
        }
        Poly {
            terms: self.terms.iter().map(|(m, c)| (m.clone(), c * k)).collect(),
        }
    }

    pub fn mul_monomial(&self, m: &Monomial, k: &GaussianRational) -> Poly {
        if k.is_zero() {
            return Poly::zero();
        }
        let mut out = Poly::zero();
        for (mm, c) in &self.terms {
            out.add_term(mm.mul(m), c * k);
        }
        out
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        let mut out = Poly::zero();
        for (m1, c1) in &self.terms {
            for (m2, c2) in &other.terms {
                out.add_term(m1.mul(m2), c1 * c2);
            }
        }
        out
    }

    pub fn pow(&self, k: u32) -> Poly {
        let mut acc = Poly::one();
        let mut base = self.clone();
        let mut e = k;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base);
            }
        }
        acc
    }

    /// Highest and lowest integer exponent of `atom` across all terms.
    pub fn exponent_range(&self, atom: &Expr) -> Option<(i64, i64)> {
        let mut range: Option<(i64, i64)> = None;
        for m in self.terms.keys() {
            let k = m
                .exponent_of(atom)
                .and_then(Exponent::as_integer)
                .unwrap_or(0);
            range = Some(match range {
                None => (k, k),
                Some((lo, hi)) => (lo.min(k), hi.max(k)),
            });
        }
        range
    }

    pub fn to_expr(&self) -> Expr {
        Expr::sum(
            self.terms
                .iter()
                .map(|(m, c)| Expr::num(c.clone()) * m.to_expr()),
        )
    }

    /// Terms in degree-lexicographic order (highest total degree first).
    pub fn sorted_terms(&self) -> Vec<(&Monomial, &GaussianRational)> {
        let mut v: Vec<_> = self.terms.iter().collect();
        v.sort_by(|(a, _), (b, _)| b.degree().cmp(&a.degree()).then_with(|| a.cmp(b)));
        v
    }

    /// Degree-lex rendering in the expression grammar.
    pub fn render(&self) -> String {
        if self.is_zero() {
            return "0".into();
        }
        let mut out = String::new();
        for (k, (m, c)) in self.sorted_terms().into_iter().enumerate() {
            let term = Expr::num(c.clone()) * m.to_expr();
            let text = term.to_string();
            if k == 0 {
                out.push_str(&text);
            } else if let Some(rest) = text.strip_prefix('-') {
                out.push_str(" - ");
                out.push_str(rest);
            } else {
                out.push_str(" + ");
                out.push_str(&text);
            }
        }
        out
    }

    /// Extracts the monomial content (common integer powers of every atom)
    /// and a unit coefficient, so that `self = coef · content · primitive`.
    fn primitive_parts(&self) -> (GaussianRational, Monomial, Poly) {
        let mut content: Option<BTreeMap<Expr, BigRational>> = None;
        for m in self.terms.keys() {
            let here: BTreeMap<Expr, BigRational> = m
                .factors()
                .iter()
                .filter_map(|(a, e)| e.as_rational().map(|q| (a.clone(), q.clone())))
                .collect();
            content = Some(match content {
                None => here,
                Some(prev) => prev
                    .into_iter()
                    .filter_map(|(a, q)| {
                        let other = here.get(&a).cloned().unwrap_or_else(BigRational::zero);
                        let lo = if other < q { other } else { q };
                        (!lo.is_zero()).then_some((a, lo))
                    })
                    .collect(),
            });
        }
        // atoms absent from a term have exponent 0, so they only survive
        // when present in every term
        let content = content.unwrap_or_default();
        let content = Monomial(
            content
                .into_iter()
                .filter(|(a, _)| self.terms.keys().all(|m| m.exponent_of(a).is_some()))
                .map(|(a, q)| (a, Exponent::constant(q)))
                .collect(),
        );
        let inv = content.inv();
        let mut prim = self.mul_monomial(&inv, &GaussianRational::one());
        let lead = prim
            .terms
            .values()
            .next()
            .cloned()
            .unwrap_or_else(GaussianRational::one);
        prim = prim.scale(&lead.inv().expect("nonzero leading coefficient"));
        (lead, content, prim)
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

/// `num / Π den_k^{e_k}` with primitive, non-monomial denominator factors.
#[derive(Clone, Debug, PartialEq)]
pub struct RatFunc {
    pub num: Poly,
    pub den: BTreeMap<Poly, u32>,
}

impl RatFunc {
    pub fn from_poly(p: Poly) -> Self {
        RatFunc {
            num: p,
            den: BTreeMap::new(),
        }
    }

    pub fn is_polynomial(&self) -> bool {
        self.den.is_empty()
    }

    fn den_product(den: &BTreeMap<Poly, u32>) -> Poly {
        den.iter()
            .fold(Poly::one(), |acc, (f, k)| acc.mul(&f.pow(*k)))
    }

    pub fn add(&self, other: &RatFunc) -> RatFunc {
        if self.den == other.den {
            return RatFunc {
                num: self.num.add(&other.num),
                den: self.den.clone(),
            };
        }
        let mut lcm = self.den.clone();
        for (f, k) in &other.den {
            let slot = lcm.entry(f.clone()).or_insert(0);
            *slot = (*slot).max(*k);
        }
        let cofactor = |den: &BTreeMap<Poly, u32>| {
            lcm.iter().fold(Poly::one(), |acc, (f, k)| {
                let have = den.get(f).copied().unwrap_or(0);
                acc.mul(&f.pow(k - have))
            })
        };
        let num = self
            .num
            .mul(&cofactor(&self.den))
            .add(&other.num.mul(&cofactor(&other.den)));
        RatFunc { num, den: lcm }
    }

    pub fn mul(&self, other: &RatFunc) -> RatFunc {
        let mut den = self.den.clone();
        for (f, k) in &other.den {
            *den.entry(f.clone()).or_insert(0) += k;
        }
        RatFunc {
            num: self.num.mul(&other.num),
            den,
        }
    }

    pub fn inv(&self) -> Result<RatFunc> {
        if self.num.is_zero() {
            return Err(Error::DivisionByZero("0".into()));
        }
        let mut num = RatFunc::den_product(&self.den);
        if let Some((m, c)) = self.num.as_monomial() {
            let k = c.inv().expect("nonzero coefficient");
            num = num.mul_monomial(&m.inv(), &k);
            return Ok(RatFunc {
                num,
                den: BTreeMap::new(),
            });
        }
        let (lead, content, prim) = self.num.primitive_parts();
        num = num.mul_monomial(
            &content.inv(),
            &lead.inv().expect("nonzero leading coefficient"),
        );
        if prim.as_monomial().is_some() {
            // content extraction left a single term
            let (m, c) = prim.as_monomial().unwrap();
            num = num.mul_monomial(&m.inv(), &c.inv().unwrap());
            return Ok(RatFunc {
                num,
                den: BTreeMap::new(),
            });
        }
        Ok(RatFunc {
            num,
            den: BTreeMap::from([(prim, 1)]),
        })
    }

    pub fn powi(&self, k: i64) -> Result<RatFunc> {
        if k < 0 {
            return self.inv()?.powi(-k);
        }
        let k = u32::try_from(k).map_err(|_| Error::NonPolynomial("exponent too large".into()))?;
        Ok(RatFunc {
            num: self.num.pow(k),
            den: self.den.iter().map(|(f, e)| (f.clone(), e * k)).collect(),
        })
    }

    pub fn to_expr(&self) -> Expr {
        let den = RatFunc::den_product(&self.den);
        self.num.to_expr() / den.to_expr()
    }
}

fn is_compound(atom: &Expr) -> bool {
    matches!(
        atom.node(),
        Node::Num(_) | Node::Add(_) | Node::Mul(_) | Node::Pow(..)
    )
}

/// Converts an expression to a rational function over its atoms.
pub fn to_ratfunc(e: &Expr) -> Result<RatFunc> {
    let r = convert(e)?;
    settle(r)
}

fn convert(e: &Expr) -> Result<RatFunc> {
    Ok(match e.node() {
        Node::Num(c) => RatFunc::from_poly(Poly::constant(c.clone())),
        Node::Sym(s) => RatFunc::from_poly(Poly::symbol(s)),
        Node::Add(ts) => {
            let mut acc = RatFunc::from_poly(Poly::zero());
            for t in ts {
                acc = acc.add(&convert(t)?);
            }
            acc
        }
        Node::Mul(fs) => {
            let mut acc = RatFunc::from_poly(Poly::one());
            for f in fs {
                acc = acc.mul(&convert(f)?);
            }
            acc
        }
        Node::Pow(b, x) => {
            if let Some(k) = x.as_integer() {
                let base = convert(b)?;
                if k < 0 && base.num.is_zero() {
                    return Err(Error::DivisionByZero(b.to_string()));
                }
                return base.powi(k);
            }
            match Exponent::from_expr(x) {
                Some(exp) => RatFunc::from_poly(Poly::atom(b.clone(), exp)),
                None => RatFunc::from_poly(Poly::atom(e.clone(), Exponent::int(1))),
            }
        }
        Node::Func(..) | Node::Deriv(..) => {
            RatFunc::from_poly(Poly::atom(e.clone(), Exponent::int(1)))
        }
    })
}

/// Moves integer parts of radical exponents out of compound atoms:
/// `w^(3/2) → w · w^(1/2)`, `w^(-1/2) → w^(-1) · w^(1/2)`.
fn settle(mut r: RatFunc) -> Result<RatFunc> {
    for _ in 0..64 {
        let needs = r.num.terms().any(|(m, _)| {
            m.factors().iter().any(|(a, e)| {
                is_compound(a)
                    && e.as_rational()
                        .is_some_and(|q| q.is_negative() || *q >= BigRational::one())
            })
        });
        if !needs {
            return Ok(r);
        }
        let mut acc = RatFunc {
            num: Poly::zero(),
            den: r.den.clone(),
        };
        let den = r.den.clone();
        for (m, c) in r.num.terms() {
            let mut keep = Monomial::one();
            let mut extra = RatFunc::from_poly(Poly::one());
            for (a, e) in m.factors() {
                match e.as_rational() {
                    Some(q) if is_compound(a) && (q.is_negative() || *q >= BigRational::one()) => {
                        let whole = q.numer().div_floor(q.denom());
                        let frac = q - BigRational::from_integer(whole.clone());
                        keep = keep.mul(&Monomial::atom(a.clone(), Exponent::constant(frac)));
                        let k = whole
                            .to_i64()
                            .ok_or_else(|| Error::NonPolynomial("exponent overflow".into()))?;
                        extra = extra.mul(&convert(a)?.powi(k)?);
                    }
                    _ => keep = keep.mul(&Monomial::atom(a.clone(), e.clone())),
                }
            }
            let term = RatFunc {
                num: Poly::term(keep, c.clone()),
                den: den.clone(),
            };
            acc = acc.add(&term.mul(&extra));
        }
        r = acc;
    }
    Err(Error::NonPolynomial(
        "radical normalization did not terminate".into(),
    ))
}

/// Expanded normal form of an expression with respect to a set of main
/// symbols (the remaining atoms act as coefficients).
#[derive(Clone, Debug, PartialEq)]
pub struct PolyForm {
    main: Vec<Symbol>,
    poly: Poly,
}

impl PolyForm {
    pub fn new(main: &[Symbol], poly: Poly) -> Result<Self> {
        let mut main = main.to_vec();
        main.sort();
        main.dedup();
        check_main(&poly, &main)?;
        Ok(PolyForm { main, poly })
    }

    pub fn main_symbols(&self) -> &[Symbol] {
        &self.main
    }

    pub fn poly(&self) -> &Poly {
        &self.poly
    }

    pub fn into_poly(self) -> Poly {
        self.poly
    }

    pub fn is_zero(&self) -> bool {
        self.poly.is_zero()
    }

    /// Groups the terms by their exponent vector in the main symbols.
    pub fn coefficients(&self) -> BTreeMap<Vec<i64>, Poly> {
        let atoms: Vec<Expr> = self.main.iter().map(Expr::symbol).collect();
        let mut out: BTreeMap<Vec<i64>, Poly> = BTreeMap::new();
        for (m, c) in self.poly.terms() {
            let key: Vec<i64> = atoms
                .iter()
                .map(|a| m.exponent_of(a).and_then(Exponent::as_integer).unwrap_or(0))
                .collect();
            let rest = atoms.iter().fold(m.clone(), |acc, a| acc.without(a));
            out.entry(key).or_default().add_term(rest, c.clone());
        }
        out
    }

    pub fn coefficient(&self, exps: &[i64]) -> Poly {
        self.coefficients().remove(exps).unwrap_or_default()
    }

    /// Lowest exponent of a main symbol; negative for Laurent forms.
    pub fn min_exponent(&self, s: &Symbol) -> Option<i64> {
        self.poly.exponent_range(&Expr::symbol(s)).map(|(lo, _)| lo)
    }

    pub fn max_exponent(&self, s: &Symbol) -> Option<i64> {
        self.poly.exponent_range(&Expr::symbol(s)).map(|(_, hi)| hi)
    }

    pub fn to_expr(&self) -> Expr {
        self.poly.to_expr()
    }
}

fn check_main(poly: &Poly, main: &[Symbol]) -> Result<()> {
    for (m, _) in poly.terms() {
        for (a, e) in m.factors() {
            match a.node() {
                Node::Sym(s) if main.contains(s) => {
                    if e.as_integer().is_none() {
                        return Err(Error::NonPolynomial(format!("{s}^({e})")));
                    }
                }
                _ => {
                    if main.iter().any(|s| a.contains_symbol(s)) {
                        return Err(Error::NonPolynomial(a.to_string()));
                    }
                }
            }
        }
    }
    Ok(())
}

/// Fully expanded (Laurent) polynomial form of `e` in `main`.
pub fn expand_normalize(e: &Expr, main: &[Symbol]) -> Result<PolyForm> {
    let r = to_ratfunc(e)?;
    if let Some((f, _)) = r.den.iter().next() {
        return Err(Error::NonPolynomial(format!("denominator {}", f.render())));
    }
    PolyForm::new(main, r.num)
}

/// Exact test that `e` vanishes identically, after clearing denominators.
pub fn poly_zero_check(e: &Expr, main: &[Symbol]) -> Result<bool> {
    let r = to_ratfunc(e)?;
    check_main(&r.num, main)?;
    Ok(r.num.is_zero())
}
