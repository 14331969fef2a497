//! Immutable symbolic expressions over Gaussian-rational constants.
//!
//! Every constructor returns a canonical form: sums and products are
//! flattened and sorted, numeric constants are folded, like terms and like
//! powers are merged. Two expressions that canonicalize identically compare
//! equal; deeper identities (expansion, cancellation across denominators)
//! are decided by [`crate::poly`].

mod diff;
mod display;
mod eval;
mod parse;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::ops;
use std::sync::Arc;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::number::GaussianRational;

pub use diff::{differentiate, differentiate_with};
pub use display::pretty;
pub use eval::{eval_complex, Bindings, POLE_GUARD};
pub use parse::{parse_expr, Scope};

/// An interned identifier.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Symbol(Arc<str>);

impl Symbol {
    pub fn new(name: &str) -> Self {
        Symbol(Arc::from(name))
    }

    pub fn name(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl From<&str> for Symbol {
    fn from(s: &str) -> Self {
        Symbol::new(s)
    }
}

/// Elementary functions carried as nodes. Square roots are powers with
/// exponent 1/2 and are only rendered as `sqrt`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Func {
    Tan,
    Cot,
    Tanh,
    Coth,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Tan => "tan",
            Func::Cot => "cot",
            Func::Tanh => "tanh",
            Func::Coth => "coth",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "tan" => Func::Tan,
            "cot" => Func::Cot,
            "tanh" => Func::Tanh,
            "coth" => Func::Coth,
            _ => return None,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Node {
    Num(GaussianRational),
    Sym(Symbol),
    Add(Vec<Expr>),
    Mul(Vec<Expr>),
    Pow(Expr, Expr),
    Func(Func, Expr),
    /// Unevaluated partial derivative; variables sorted, orders positive.
    Deriv(Expr, Vec<(Symbol, u32)>),
}

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Expr(Arc<Node>);

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

impl Expr {
    fn raw(node: Node) -> Expr {
        Expr(Arc::new(node))
    }

    pub fn node(&self) -> &Node {
        &self.0
    }

    pub fn num(v: GaussianRational) -> Expr {
        Expr::raw(Node::Num(v))
    }

    pub fn int(v: i64) -> Expr {
        Expr::num(GaussianRational::from_int(v))
    }

    pub fn rational(n: i64, d: i64) -> Expr {
        Expr::num(GaussianRational::from_ratio(n, d))
    }

    pub fn zero() -> Expr {
        Expr::int(0)
    }

    pub fn one() -> Expr {
        Expr::int(1)
    }

    pub fn i() -> Expr {
        Expr::num(GaussianRational::i())
    }

    pub fn sym(name: &str) -> Expr {
        Expr::raw(Node::Sym(Symbol::new(name)))
    }

    pub fn symbol(s: &Symbol) -> Expr {
        Expr::raw(Node::Sym(s.clone()))
    }

    pub fn as_num(&self) -> Option<&GaussianRational> {
        match self.node() {
            Node::Num(v) => Some(v),
            _ => None,
        }
    }

    pub fn as_sym(&self) -> Option<&Symbol> {
        match self.node() {
            Node::Sym(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_integer(&self) -> Option<i64> {
        self.as_num().and_then(GaussianRational::to_integer)
    }

    /// A real rational constant, if this is one.
    pub fn as_rational(&self) -> Option<&BigRational> {
        self.as_num().and_then(GaussianRational::as_real)
    }

    pub fn is_zero(&self) -> bool {
        self.as_num().is_some_and(GaussianRational::is_zero)
    }

    pub fn is_one(&self) -> bool {
        self.as_num().is_some_and(GaussianRational::is_one)
    }

    /// `1/0`, the single undefined value. It absorbs every operation that
    /// touches it, so no other structure survives next to it.
    pub fn undefined() -> Expr {
        Expr::raw(Node::Pow(Expr::zero(), Expr::int(-1)))
    }

    pub fn is_undefined(&self) -> bool {
        matches!(self.node(), Node::Pow(b, x) if b.is_zero() && x.as_integer() == Some(-1))
    }

    /// Canonical sum.
    pub fn sum(terms: impl IntoIterator<Item = Expr>) -> Expr {
        let terms: Vec<Expr> = terms.into_iter().collect();
        if terms.iter().any(Expr::is_undefined) {
            return Expr::undefined();
        }
        let mut constant = GaussianRational::zero();
        let mut like: BTreeMap<Expr, GaussianRational> = BTreeMap::new();
        fn push(
            e: Expr,
            constant: &mut GaussianRational,
            like: &mut BTreeMap<Expr, GaussianRational>,
        ) {
            match e.node() {
                Node::Add(ts) => {
                    for t in ts {
                        push(t.clone(), constant, like);
                    }
                }
                Node::Num(c) => *constant = &*constant + c,
                _ => {
                    let (c, rest) = e.split_coeff();
                    let slot = like.entry(rest).or_insert_with(GaussianRational::zero);
                    *slot = &*slot + &c;
                }
            }
        }
        for t in terms {
            push(t, &mut constant, &mut like);
        }
        let mut out = Vec::with_capacity(like.len() + 1);
        if !constant.is_zero() {
            out.push(Expr::num(constant));
        }
        for (rest, c) in like {
            if !c.is_zero() {
                out.push(rest.scaled_raw(c));
            }
        }
        match out.len() {
            0 => Expr::zero(),
            1 => out.pop().unwrap(),
            _ => Expr::raw(Node::Add(out)),
        }
    }

    /// `c · self` for a coefficient-free canonical `self`.
    fn scaled_raw(self, c: GaussianRational) -> Expr {
        if c.is_one() {
            return self;
        }
        match self.node() {
            Node::Mul(fs) => {
                let mut v = Vec::with_capacity(fs.len() + 1);
                v.push(Expr::num(c));
                v.extend(fs.iter().cloned());
                Expr::raw(Node::Mul(v))
            }
            _ => Expr::raw(Node::Mul(vec![Expr::num(c), self])),
        }
    }

    /// Splits a canonical term into its numeric coefficient and the rest.
    pub fn split_coeff(&self) -> (GaussianRational, Expr) {
        match self.node() {
            Node::Num(c) => (c.clone(), Expr::one()),
            Node::Mul(fs) => match fs[0].node() {
                Node::Num(c) => {
                    let rest = if fs.len() == 2 {
                        fs[1].clone()
                    } else {
                        Expr::raw(Node::Mul(fs[1..].to_vec()))
                    };
                    (c.clone(), rest)
                }
                _ => (GaussianRational::one(), self.clone()),
            },
            _ => (GaussianRational::one(), self.clone()),
        }
    }

    /// Canonical product.
    pub fn product(factors: impl IntoIterator<Item = Expr>) -> Expr {
        let factors: Vec<Expr> = factors.into_iter().collect();
        if factors.iter().any(Expr::is_undefined) {
            return Expr::undefined();
        }
        let mut coef = GaussianRational::one();
        let mut powers: BTreeMap<Expr, Vec<Expr>> = BTreeMap::new();
        fn push(e: Expr, coef: &mut GaussianRational, powers: &mut BTreeMap<Expr, Vec<Expr>>) {
            match e.node() {
                Node::Num(c) => *coef = &*coef * c,
                Node::Mul(fs) => {
                    for f in fs {
                        push(f.clone(), coef, powers);
                    }
                }
                Node::Pow(b, x) => powers.entry(b.clone()).or_default().push(x.clone()),
                _ => powers.entry(e).or_default().push(Expr::one()),
            }
        }
        for f in factors {
            push(f, &mut coef, &mut powers);
        }
        if coef.is_zero() {
            return Expr::zero();
        }
        let mut out = Vec::with_capacity(powers.len());
        let mut reshaped = false;
        for (base, exps) in powers {
            let p = Expr::pow(base, Expr::sum(exps));
            match p.node() {
                Node::Num(c) => coef = &coef * c,
                Node::Mul(fs) => {
                    reshaped = true;
                    for f in fs {
                        match f.node() {
                            Node::Num(c) => coef = &coef * c,
                            _ => out.push(f.clone()),
                        }
                    }
                }
                _ => out.push(p),
            }
        }
        if coef.is_zero() {
            return Expr::zero();
        }
        if reshaped {
            // a power split into several factors; merge once more
            out.push(Expr::num(coef));
            return Expr::product(out);
        }
        out.sort();
        if out.is_empty() {
            return Expr::num(coef);
        }
        if out.len() == 1 && coef.is_one() {
            return out.pop().unwrap();
        }
        if out.len() == 1 {
            // a numeric coefficient distributes over a lone sum
            if let Node::Add(ts) = out[0].node() {
                return Expr::sum(
                    ts.iter()
                        .map(|t| Expr::product([Expr::num(coef.clone()), t.clone()])),
                );
            }
        }
        let mut v = Vec::with_capacity(out.len() + 1);
        if !coef.is_one() {
            v.push(Expr::num(coef));
        }
        v.extend(out);
        Expr::raw(Node::Mul(v))
    }

    /// Canonical power.
    pub fn pow(base: Expr, exp: Expr) -> Expr {
        if base.is_undefined() || exp.is_undefined() {
            return Expr::undefined();
        }
        if exp.is_zero() {
            return Expr::one();
        }
        if exp.is_one() {
            return base;
        }
        if base.is_one() {
            return Expr::one();
        }
        let int_exp = exp.as_integer();
        match base.node() {
            Node::Num(c) => {
                if let Some(k) = int_exp {
                    return match c.pow(k) {
                        Some(v) => Expr::num(v),
                        None if c.is_zero() => Expr::undefined(),
                        None => Expr::raw(Node::Pow(base, exp)),
                    };
                }
                if let Some(q) = exp.as_rational() {
                    if let Some(r) = c.as_real() {
                        return rational_power(r, q)
                            .unwrap_or_else(|| Expr::raw(Node::Pow(base, exp)));
                    }
                }
                Expr::raw(Node::Pow(base, exp))
            }
            Node::Pow(w, a) if int_exp.is_some() => {
                Expr::pow(w.clone(), Expr::product([a.clone(), exp]))
            }
            Node::Mul(fs) => {
                if int_exp.is_some() {
                    return Expr::product(fs.iter().map(|f| Expr::pow(f.clone(), exp.clone())));
                }
                // (k·w)^q = k^q · w^q for a positive rational k
                if exp.as_rational().is_some() {
                    if let Node::Num(c) = fs[0].node() {
                        if c.as_real().is_some_and(|r| r.is_positive()) {
                            let rest = Expr::product(fs[1..].iter().cloned());
                            return Expr::product([
                                Expr::pow(fs[0].clone(), exp.clone()),
                                Expr::pow(rest, exp),
                            ]);
                        }
                    }
                }
                Expr::raw(Node::Pow(base, exp))
            }
            _ => Expr::raw(Node::Pow(base, exp)),
        }
    }

    pub fn powi(base: Expr, k: i64) -> Expr {
        Expr::pow(base, Expr::int(k))
    }

    pub fn sqrt(arg: Expr) -> Expr {
        Expr::pow(arg, Expr::rational(1, 2))
    }

    pub fn recip(e: Expr) -> Expr {
        Expr::powi(e, -1)
    }

    pub fn func(f: Func, arg: Expr) -> Expr {
        if arg.is_undefined() {
            return Expr::undefined();
        }
        Expr::raw(Node::Func(f, arg))
    }

    /// Derivative marker `D(e, vars…)`; nested markers merge.
    pub fn deriv(e: Expr, vars: &[(Symbol, u32)]) -> Expr {
        let mut orders: BTreeMap<Symbol, u32> = BTreeMap::new();
        let inner = match e.node() {
            Node::Deriv(w, vs) => {
                for (s, k) in vs {
                    *orders.entry(s.clone()).or_default() += k;
                }
                w.clone()
            }
            _ => e,
        };
        for (s, k) in vars {
            *orders.entry(s.clone()).or_default() += k;
        }
        orders.retain(|_, k| *k > 0);
        if orders.is_empty() {
            return inner;
        }
        if inner.as_num().is_some() {
            return Expr::zero();
        }
        Expr::raw(Node::Deriv(inner, orders.into_iter().collect()))
    }

    /// The additive terms of this expression.
    pub fn terms(&self) -> Vec<Expr> {
        match self.node() {
            Node::Add(ts) => ts.clone(),
            _ if self.is_zero() => Vec::new(),
            _ => vec![self.clone()],
        }
    }

    /// The multiplicative factors of this expression (coefficient included).
    pub fn factors(&self) -> Vec<Expr> {
        match self.node() {
            Node::Mul(fs) => fs.clone(),
            _ => vec![self.clone()],
        }
    }

    pub fn children(&self) -> Vec<Expr> {
        match self.node() {
            Node::Num(_) | Node::Sym(_) => Vec::new(),
            Node::Add(v) | Node::Mul(v) => v.clone(),
            Node::Pow(b, e) => vec![b.clone(), e.clone()],
            Node::Func(_, a) => vec![a.clone()],
            Node::Deriv(w, _) => vec![w.clone()],
        }
    }

    /// Rebuilds this node from transformed children through the canonical
    /// constructors.
    pub fn map_children(&self, mut f: impl FnMut(&Expr) -> Expr) -> Expr {
        match self.node() {
            Node::Num(_) | Node::Sym(_) => self.clone(),
            Node::Add(v) => Expr::sum(v.iter().map(&mut f)),
            Node::Mul(v) => Expr::product(v.iter().map(&mut f)),
            Node::Pow(b, e) => Expr::pow(f(b), f(e)),
            Node::Func(g, a) => Expr::func(*g, f(a)),
            Node::Deriv(w, vs) => Expr::deriv(f(w), vs),
        }
    }

    /// Top-down rewrite: wherever `f` returns a replacement, it is used
    /// without descending further.
    pub fn replace(&self, f: &mut dyn FnMut(&Expr) -> Option<Expr>) -> Expr {
        if let Some(r) = f(self) {
            return r;
        }
        self.map_children(|c| c.replace(f))
    }

    /// Simultaneous substitution of symbols.
    pub fn substitute(&self, bindings: &BTreeMap<Symbol, Expr>) -> Expr {
        if bindings.is_empty() {
            return self.clone();
        }
        self.replace(&mut |e| match e.node() {
            Node::Sym(s) => Some(bindings.get(s).cloned().unwrap_or_else(|| e.clone())),
            Node::Num(_) => Some(e.clone()),
            _ => None,
        })
    }

    /// Substitutes whole subexpressions (e.g. derivative markers) that
    /// compare equal to a key.
    pub fn substitute_exprs(&self, bindings: &BTreeMap<Expr, Expr>) -> Expr {
        if bindings.is_empty() {
            return self.clone();
        }
        self.replace(&mut |e| bindings.get(e).cloned())
    }

    pub fn free_symbols(&self) -> BTreeSet<Symbol> {
        let mut out = BTreeSet::new();
        self.collect_symbols(&mut out);
        out
    }

    fn collect_symbols(&self, out: &mut BTreeSet<Symbol>) {
        match self.node() {
            Node::Sym(s) => {
                out.insert(s.clone());
            }
            Node::Deriv(w, vs) => {
                w.collect_symbols(out);
                out.extend(vs.iter().map(|(s, _)| s.clone()));
            }
            _ => {
                for c in self.children() {
                    c.collect_symbols(out);
                }
            }
        }
    }

    pub fn contains_symbol(&self, s: &Symbol) -> bool {
        match self.node() {
            Node::Sym(t) => t == s,
            Node::Num(_) => false,
            Node::Deriv(w, vs) => w.contains_symbol(s) || vs.iter().any(|(v, _)| v == s),
            _ => self.children().iter().any(|c| c.contains_symbol(s)),
        }
    }

    pub fn contains_any(&self, syms: &BTreeSet<Symbol>) -> bool {
        syms.iter().any(|s| self.contains_symbol(s))
    }

    pub fn contains_deriv(&self) -> bool {
        match self.node() {
            Node::Deriv(..) => true,
            _ => self.children().iter().any(Expr::contains_deriv),
        }
    }

    /// Distributes products over sums and expands positive integer powers of
    /// sums. Derivative markers and function arguments are expanded inside
    /// but treated as atoms outside.
    pub fn expand(&self) -> Expr {
        match self.node() {
            Node::Num(_) | Node::Sym(_) => self.clone(),
            Node::Add(ts) => Expr::sum(ts.iter().map(Expr::expand)),
            Node::Mul(fs) => {
                let mut acc = vec![Expr::one()];
                for f in fs {
                    acc = multiply_out(&acc, &f.expand().terms());
                }
                Expr::sum(acc)
            }
            Node::Pow(b, e) => {
                let base = b.expand();
                match e.as_integer() {
                    Some(k) if k > 1 && matches!(base.node(), Node::Add(_)) => {
                        let terms = base.terms();
                        let mut acc = terms.clone();
                        for _ in 1..k {
                            acc = multiply_out(&acc, &terms);
                        }
                        Expr::sum(acc)
                    }
                    _ => settle(Expr::pow(base, e.expand())),
                }
            }
            Node::Func(f, a) => Expr::func(*f, a.expand()),
            Node::Deriv(w, vs) => Expr::deriv(w.expand(), vs),
        }
    }
}

fn multiply_out(lhs: &[Expr], rhs: &[Expr]) -> Vec<Expr> {
    let mut out = Vec::with_capacity(lhs.len() * rhs.len());
    for a in lhs {
        for b in rhs {
            out.push(settle(Expr::product([a.clone(), b.clone()])));
        }
    }
    out
}

/// Merging radicals can surface a sum as a factor (`sqrt(w)^2 = w`), which
/// then needs distributing again.
fn settle(e: Expr) -> Expr {
    let sum_factor = |f: &Expr| match f.node() {
        Node::Add(_) => true,
        Node::Pow(b, x) => {
            matches!(b.node(), Node::Add(_)) && x.as_integer().is_some_and(|k| k > 1)
        }
        _ => false,
    };
    let again = match e.node() {
        Node::Mul(fs) => fs.iter().any(sum_factor),
        Node::Pow(..) => sum_factor(&e),
        _ => false,
    };
    if again {
        e.expand()
    } else {
        e
    }
}

/// `r^q` for rational `r` and non-integer rational `q`, exact where the
/// result is a rational multiple of a canonical radical. Only half-integer
/// exponents are reduced; other exponents stay symbolic.
fn rational_power(r: &BigRational, q: &BigRational) -> Option<Expr> {
    if q.denom() != &BigInt::from(2) {
        return None;
    }
    if r.is_zero() {
        return Some(if q.is_positive() {
            Expr::zero()
        } else {
            Expr::undefined()
        });
    }
    // r^(k/2) = (r^floor(k/2)) · r^(1/2) when k is odd
    let k = q.numer();
    let (whole, _) = k.div_mod_floor(&BigInt::from(2));
    let whole: i64 = i64::try_from(&whole).ok()?;
    let g = GaussianRational::real(r.clone());
    let prefix = g.pow(whole)?;
    // built directly: going through `product` would re-enter `pow`
    let (coef, radical) = match g.exact_sqrt() {
        Some(s) => return Some(Expr::num(&prefix * &s)),
        None if r.is_negative() => (
            &prefix * &GaussianRational::i(),
            GaussianRational::real(-r.clone()),
        ),
        None => (prefix, g),
    };
    let root = Expr::raw(Node::Pow(
        Expr::num(radical),
        Expr::num(GaussianRational::real(rat(1, 2))),
    ));
    Some(if coef.is_one() {
        root
    } else {
        Expr::raw(Node::Mul(vec![Expr::num(coef), root]))
    })
}

impl From<i64> for Expr {
    fn from(v: i64) -> Self {
        Expr::int(v)
    }
}

impl From<&Symbol> for Expr {
    fn from(s: &Symbol) -> Self {
        Expr::symbol(s)
    }
}

impl From<GaussianRational> for Expr {
    fn from(v: GaussianRational) -> Self {
        Expr::num(v)
    }
}

macro_rules! binop {
    ($tr:ident, $m:ident, $body:expr) => {
        impl ops::$tr<Expr> for Expr {
            type Output = Expr;
            fn $m(self, rhs: Expr) -> Expr {
                let f: fn(Expr, Expr) -> Expr = $body;
                f(self, rhs)
            }
        }
        impl ops::$tr<&Expr> for &Expr {
            type Output = Expr;
            fn $m(self, rhs: &Expr) -> Expr {
                let f: fn(Expr, Expr) -> Expr = $body;
                f(self.clone(), rhs.clone())
            }
        }
        impl ops::$tr<&Expr> for Expr {
            type Output = Expr;
            fn $m(self, rhs: &Expr) -> Expr {
                let f: fn(Expr, Expr) -> Expr = $body;
                f(self, rhs.clone())
            }
        }
        impl ops::$tr<Expr> for &Expr {
            type Output = Expr;
            fn $m(self, rhs: Expr) -> Expr {
                let f: fn(Expr, Expr) -> Expr = $body;
                f(self.clone(), rhs)
            }
        }
    };
}

binop!(Add, add, |a, b| Expr::sum([a, b]));
binop!(Sub, sub, |a, b| Expr::sum([
    a,
    Expr::product([Expr::int(-1), b])
]));
binop!(Mul, mul, |a, b| Expr::product([a, b]));
binop!(Div, div, |a, b| Expr::product([a, Expr::recip(b)]));

impl ops::Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::product([Expr::int(-1), self])
    }
}

impl ops::Neg for &Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        -self.clone()
    }
}

/// Whether a numeric coefficient renders with a leading minus sign.
pub(crate) fn coeff_is_negative(c: &GaussianRational) -> bool {
    if c.is_real() {
        c.re().is_negative()
    } else if c.re().is_zero() {
        c.im().is_negative()
    } else {
        false
    }
}

pub(crate) fn half() -> BigRational {
    BigRational::one() / BigRational::from_integer(BigInt::from(2))
}
