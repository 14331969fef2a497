//! Exact verification of candidate solutions of an algebraic system, and
//! numeric discovery of roots at instantiated parameters.

use std::collections::{BTreeMap, BTreeSet};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::expr::{eval_complex, parse_expr, Bindings, Expr, Node, Scope, Symbol};
use crate::meda::AlgebraicSystem;
use crate::poly::{to_ratfunc, Exponent, Poly};

/// An assignment of system unknowns, exact or numeric.
#[derive(Clone, Debug, Default)]
pub struct Candidate {
    pub source: String,
    pub bindings: BTreeMap<Symbol, Expr>,
    pub numeric: BTreeMap<Symbol, Complex64>,
    /// Named shorthands, substituted into bindings in reverse order of
    /// declaration so later abbreviations may use earlier ones.
    pub abbreviations: Vec<(Symbol, Expr)>,
    pub arbitrary: Vec<Symbol>,
}

/// A `key: value` line a candidate file carries for some other consumer.
#[derive(Clone, Debug)]
pub struct Directive {
    pub key: String,
    pub value: String,
    pub line: usize,
}

impl Candidate {
    /// Parses candidate text; `key: value` lines other than `source:` and
    /// `arbitrary:` are returned as directives.
    pub fn parse(text: &str) -> Result<(Candidate, Vec<Directive>)> {
        let scope = Scope::open();
        let mut cand = Candidate::default();
        let mut directives = Vec::new();
        for (k, raw) in text.lines().enumerate() {
            let line = k + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let dsl = |msg: String| Error::Dsl { line, msg };
            let expr = |s: &str| parse_expr(s.trim(), &scope).map_err(|e| dsl(e.to_string()));
            if let Some(rest) = content.strip_prefix("abbrev ") {
                let (name, value) = rest
                    .split_once('=')
                    .ok_or_else(|| dsl("expected `abbrev X = expr`".into()))?;
                cand.abbreviations
                    .push((symbol_name(name).map_err(dsl)?, expr(value)?));
                continue;
            }
            let colon = content.find(':');
            let equals = content.find('=');
            match (colon, equals) {
                (Some(c), e) if e.is_none_or(|e| c < e) => {
                    let key = content[..c].trim();
                    let value = content[c + 1..].trim();
                    match key {
                        "source" => cand.source = value.to_string(),
                        "arbitrary" => {
                            for name in value.split([',', ' ']).filter(|s| !s.is_empty()) {
                                cand.arbitrary.push(symbol_name(name).map_err(dsl)?);
                            }
                        }
                        _ => directives.push(Directive {
                            key: key.to_string(),
                            value: value.to_string(),
                            line,
                        }),
                    }
                }
                (_, Some(e)) => {
                    let name = symbol_name(&content[..e]).map_err(dsl)?;
                    if cand
                        .bindings
                        .insert(name.clone(), expr(&content[e + 1..])?)
                        .is_some()
                    {
                        return Err(dsl(format!("`{name}` bound twice")));
                    }
                }
                _ => return Err(dsl(format!("cannot read `{content}`"))),
            }
        }
        Ok((cand, directives))
    }

    /// Bindings with every abbreviation expanded.
    pub fn resolved(&self) -> BTreeMap<Symbol, Expr> {
        self.bindings
            .iter()
            .map(|(k, v)| (k.clone(), self.expand_abbreviations(v)))
            .collect()
    }

    pub fn expand_abbreviations(&self, e: &Expr) -> Expr {
        let mut out = e.clone();
        for (name, value) in self.abbreviations.iter().rev() {
            out = out.substitute(&BTreeMap::from([(name.clone(), value.clone())]));
        }
        out
    }

    /// Numeric values of every binding at the given parameter values.
    pub fn instantiate(&self, params: &Bindings) -> Result<Bindings> {
        let mut out: Bindings = self.numeric.iter().map(|(k, v)| (k.clone(), *v)).collect();
        for (k, v) in self.resolved() {
            out.insert(k, eval_complex(&v, params)?);
        }
        Ok(out)
    }

    pub fn to_json(&self) -> serde_json::Value {
        let exact: BTreeMap<String, String> = self
            .resolved()
            .iter()
            .map(|(k, v)| (k.name().to_string(), v.to_string()))
            .collect();
        let numeric: BTreeMap<&str, [f64; 2]> = self
            .numeric
            .iter()
            .map(|(k, v)| (k.name(), [clean(v.re), clean(v.im)]))
            .collect();
        serde_json::json!({
            "source": self.source,
            "exact": exact,
            "numeric": numeric,
            "arbitrary": self.arbitrary.iter().map(Symbol::name).collect::<Vec<_>>(),
        })
    }
}

fn symbol_name(text: &str) -> std::result::Result<Symbol, String> {
    let t = text.trim();
    let mut chars = t.chars();
    let ok = chars.next().is_some_and(|c| c.is_ascii_alphabetic())
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_');
    if ok && t != "i" {
        Ok(Symbol::new(t))
    } else {
        Err(format!("invalid symbol `{t}`"))
    }
}

/// Rounds to 12 decimals and normalizes negative zero, for stable output.
fn clean(v: f64) -> f64 {
    let r = (v * 1e12).round() / 1e12;
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct EquationStatus {
    pub power: i64,
    pub zero: bool,
    /// The nonzero residual, rendered.
    pub residual: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct VerificationReport {
    pub source: String,
    pub pass: bool,
    pub equations: Vec<EquationStatus>,
    pub notes: Vec<String>,
}

impl VerificationReport {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).unwrap_or(serde_json::Value::Null)
    }
}

/// Substitutes an exact candidate into every equation and checks that each
/// cleared numerator vanishes identically.
pub fn verify_candidate(system: &AlgebraicSystem, cand: &Candidate) -> Result<VerificationReport> {
    let bindings = cand.resolved();
    let unknowns: BTreeSet<&Symbol> = system.unknowns.iter().collect();
    let mut allowed: BTreeSet<Symbol> = system.params.iter().cloned().collect();
    allowed.extend(cand.arbitrary.iter().cloned());
    for (k, v) in &bindings {
        if !unknowns.contains(k) {
            return Err(Error::Candidate(format!(
                "`{k}` is not an unknown of the system"
            )));
        }
        if let Some(bad) = v.free_symbols().into_iter().find(|s| !allowed.contains(s)) {
            return Err(Error::Candidate(format!(
                "binding of `{k}` references undeclared `{bad}`"
            )));
        }
    }
    let mut notes = Vec::new();
    for u in &system.unknowns {
        if !bindings.contains_key(u) && !cand.arbitrary.contains(u) {
            return Err(Error::Candidate(format!(
                "unknown `{u}` is neither bound nor arbitrary"
            )));
        }
    }
    for a in &cand.arbitrary {
        notes.push(format!("{a} arbitrary"));
    }
    let mut equations = Vec::with_capacity(system.len());
    for eq in &system.equations {
        let residual = to_ratfunc(&eq.poly.to_expr().substitute(&bindings))?;
        let zero = residual.num.is_zero();
        equations.push(EquationStatus {
            power: eq.power,
            zero,
            residual: (!zero).then(|| residual.to_expr().to_string()),
        });
    }
    let pass = equations.iter().all(|e| e.zero);
    Ok(VerificationReport {
        source: cand.source.clone(),
        pass,
        equations,
        notes,
    })
}

/// Magnitude of each equation at fully numeric values.
pub fn numeric_residuals(system: &AlgebraicSystem, values: &Bindings) -> Result<Vec<f64>> {
    system
        .equations
        .iter()
        .map(|e| Ok(eval_complex(&e.poly.to_expr(), values)?.norm()))
        .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct SolveConfig {
    pub starts: usize,
    pub radius: f64,
    pub tol: f64,
    pub dedup: f64,
    pub max_iter: usize,
    pub seed: u64,
    /// Keep roots whose profile is constant (every a_j, b_j with j ≥ 1 zero).
    pub keep_constant: bool,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig {
            starts: 200,
            radius: 5.0,
            tol: 1e-10,
            dedup: 1e-6,
            max_iter: 100,
            seed: 0,
            keep_constant: false,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SolveOutcome {
    pub unknowns: Vec<Symbol>,
    pub candidates: Vec<Candidate>,
    pub converged_starts: usize,
    /// Distinct constant-profile roots left out of `candidates`.
    pub constant_roots: usize,
}

impl SolveOutcome {
    pub fn status(&self) -> &'static str {
        if self.candidates.is_empty() {
            "no roots found"
        } else {
            "ok"
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "status": self.status(),
            "unknowns": self.unknowns.iter().map(Symbol::name).collect::<Vec<_>>(),
            "converged_starts": self.converged_starts,
            "constant_roots": self.constant_roots,
            "candidates": self.candidates.iter().map(Candidate::to_json).collect::<Vec<_>>(),
        })
    }
}

/// A polynomial in the free unknowns with complex coefficients.
struct NumPoly {
    terms: Vec<(Complex64, Vec<(usize, u32)>)>,
}

impl NumPoly {
    fn compile(p: &Poly, index: &BTreeMap<Symbol, usize>, fixed: &Bindings) -> Result<NumPoly> {
        let mut terms = Vec::with_capacity(p.len());
        for (mono, c) in p.terms() {
            let mut coef = c.to_complex64();
            let mut powers = Vec::new();
            for (atom, e) in mono.factors() {
                let s = match atom.node() {
                    Node::Sym(s) => s,
                    _ => return Err(Error::Solve(format!("non-symbol atom `{atom}`"))),
                };
                let k = e.as_integer().filter(|k| *k >= 0).ok_or_else(|| {
                    Error::Solve(format!(
                        "non-polynomial power {s}^({})",
                        Exponent::to_expr(e)
                    ))
                })?;
                if let Some(&j) = index.get(s) {
                    powers.push((j, k as u32));
                } else if let Some(v) = fixed.get(s) {
                    coef *= v.powi(k as i32);
                } else {
                    return Err(Error::Solve(format!("symbol `{s}` has no value")));
                }
            }
            terms.push((coef, powers));
        }
        Ok(NumPoly { terms })
    }

    fn eval(&self, x: &[Complex64]) -> Complex64 {
        self.terms
            .iter()
            .map(|(c, ps)| ps.iter().fold(*c, |acc, (j, k)| acc * x[*j].powu(*k)))
            .sum()
    }

    fn gradient(&self, x: &[Complex64], out: &mut [Complex64]) {
        out.iter_mut().for_each(|v| *v = Complex64::new(0.0, 0.0));
        for (c, ps) in &self.terms {
            for (a, (j, k)) in ps.iter().enumerate() {
                let mut v = *c * Complex64::new(f64::from(*k), 0.0) * x[*j].powu(k - 1);
                for (b, (i, m)) in ps.iter().enumerate() {
                    if a != b {
                        v *= x[*i].powu(*m);
                    }
                }
                out[*j] += v;
            }
        }
    }
}

fn inf_norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Residuals `F·(1 + 1/|s|⁴)` in real coordinates, where `s` collects the
/// coefficients that make the profile non-constant. The factor repels the
/// iteration from the family of constant roots without moving other roots;
/// the fourth power outweighs the quadratic vanishing of F near `V ≡ 0`.
struct Deflated<'a> {
    eqs: &'a [NumPoly],
    shape: &'a [usize],
}

impl Deflated<'_> {
    fn factor(&self, x: &[Complex64]) -> (f64, f64) {
        if self.shape.is_empty() {
            return (1.0, 0.0);
        }
        let s: f64 = self.shape.iter().map(|&i| x[i].norm_sqr()).sum();
        (1.0 + 1.0 / (s * s), s)
    }

    fn raw(&self, x: &[Complex64]) -> Vec<Complex64> {
        self.eqs.iter().map(|e| e.eval(x)).collect()
    }

    fn residual(&self, x: &[Complex64]) -> DVector<f64> {
        let (m, _) = self.factor(x);
        let f = self.raw(x);
        DVector::from_iterator(2 * f.len(), f.iter().flat_map(|z| [z.re * m, z.im * m]))
    }

    fn jacobian(&self, x: &[Complex64], row: &mut [Complex64]) -> DMatrix<f64> {
        let n = x.len();
        let (m, s) = self.factor(x);
        let f = self.raw(x);
        let mut jac = DMatrix::<f64>::zeros(2 * self.eqs.len(), 2 * n);
        for (i, e) in self.eqs.iter().enumerate() {
            e.gradient(x, row);
            for j in 0..n {
                let d = row[j];
                jac[(2 * i, 2 * j)] = m * d.re;
                jac[(2 * i, 2 * j + 1)] = -m * d.im;
                jac[(2 * i + 1, 2 * j)] = m * d.im;
                jac[(2 * i + 1, 2 * j + 1)] = m * d.re;
            }
            if !self.shape.is_empty() {
                // ∂m/∂(re, im) of x_k is -4(re, im)/s³
                for &k in self.shape {
                    let (gr, gi) = (-4.0 * x[k].re / (s * s * s), -4.0 * x[k].im / (s * s * s));
                    jac[(2 * i, 2 * k)] += f[i].re * gr;
                    jac[(2 * i, 2 * k + 1)] += f[i].re * gi;
                    jac[(2 * i + 1, 2 * k)] += f[i].im * gr;
                    jac[(2 * i + 1, 2 * k + 1)] += f[i].im * gi;
                }
            }
        }
        jac
    }
}

/// Levenberg–Marquardt on the (possibly overdetermined) deflated system.
fn levenberg_marquardt(
    sys: &Deflated<'_>,
    start: Vec<Complex64>,
    cfg: &SolveConfig,
) -> Option<Vec<Complex64>> {
    let n = start.len();
    let mut x = start;
    let mut f = sys.residual(&x);
    let mut cost = f.norm_squared();
    let mut mu = 1e-3;
    let mut polish = 0;
    let mut row = vec![Complex64::new(0.0, 0.0); n];
    for _ in 0..cfg.max_iter {
        if !cost.is_finite() {
            return None;
        }
        if f.amax() < cfg.tol {
            // a few extra steps tighten the root well below tolerance
            polish += 1;
            if polish > 3 {
                break;
            }
        }
        let jac = sys.jacobian(&x, &mut row);
        let jt = jac.transpose();
        let jtj = &jt * &jac;
        let g = &jt * &f;
        let mut accepted = false;
        for _ in 0..12 {
            let mut a = jtj.clone();
            for d in 0..2 * n {
                a[(d, d)] += mu * (1.0 + jtj[(d, d)]);
            }
            let Some(step) = a.lu().solve(&(-&g)) else {
                mu *= 10.0;
                continue;
            };
            let trial: Vec<Complex64> = x
                .iter()
                .enumerate()
                .map(|(j, v)| v + Complex64::new(step[2 * j], step[2 * j + 1]))
                .collect();
            let ft = sys.residual(&trial);
            let ct = ft.norm_squared();
            if ct.is_finite() && ct <= cost {
                x = trial;
                f = ft;
                cost = ct;
                mu = (mu / 3.0).max(1e-15);
                accepted = true;
                break;
            }
            mu *= 4.0;
        }
        if !accepted {
            break;
        }
    }
    (inf_norm(&sys.raw(&x)) < cfg.tol).then_some(x)
}

/// Multistart Levenberg–Marquardt at fixed parameter values.
pub fn solve_numeric(
    system: &AlgebraicSystem,
    params: &Bindings,
    pinned: &Bindings,
    cfg: &SolveConfig,
) -> Result<SolveOutcome> {
    if cfg.starts == 0
        || cfg.radius <= 0.0
        || cfg.tol <= 0.0
        || cfg.dedup <= 0.0
        || cfg.max_iter == 0
    {
        return Err(Error::Solve("solver settings must be positive".into()));
    }
    for s in pinned.keys() {
        if !system.unknowns.contains(s) {
            return Err(Error::Solve(format!("pinned `{s}` is not an unknown")));
        }
    }
    let free: Vec<Symbol> = system
        .unknowns
        .iter()
        .filter(|s| !pinned.contains_key(*s))
        .cloned()
        .collect();
    if free.len() > 8 {
        return Err(Error::Solve(format!(
            "{} free unknowns; at most 8 are supported",
            free.len()
        )));
    }
    for p in &system.params {
        if !params.contains_key(p) {
            return Err(Error::Solve(format!("parameter `{p}` has no value")));
        }
    }
    let index: BTreeMap<Symbol, usize> = free
        .iter()
        .cloned()
        .enumerate()
        .map(|(i, s)| (s, i))
        .collect();
    let mut fixed = params.clone();
    fixed.extend(pinned.iter().map(|(k, v)| (k.clone(), *v)));
    let eqs: Vec<NumPoly> = system
        .equations
        .iter()
        .map(|e| NumPoly::compile(&e.poly, &index, &fixed))
        .collect::<Result<_>>()?;

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let starts: Vec<Vec<Complex64>> = (0..cfg.starts)
        .map(|_| {
            (0..free.len())
                .map(|_| {
                    Complex64::new(
                        rng.random_range(-cfg.radius..cfg.radius),
                        rng.random_range(-cfg.radius..cfg.radius),
                    )
                })
                .collect()
        })
        .collect();
    let shape_syms: Vec<&Symbol> = system.ansatz.a[1..]
        .iter()
        .chain(&system.ansatz.b)
        .collect();
    let shape: Vec<usize> = shape_syms
        .iter()
        .filter_map(|s| index.get(*s).copied())
        .collect();
    let pinned_shape_zero = shape_syms
        .iter()
        .filter_map(|s| pinned.get(*s))
        .all(|v| v.norm() < cfg.dedup);
    let deflate: &[usize] = if pinned_shape_zero && !cfg.keep_constant {
        &shape
    } else {
        &[]
    };
    let sys = Deflated {
        eqs: &eqs,
        shape: deflate,
    };
    let roots: Vec<Vec<Complex64>> = starts
        .into_par_iter()
        .filter_map(|s| levenberg_marquardt(&sys, s, cfg))
        .collect();
    let converged_starts = roots.len();

    // independent re-check on the symbolic equations
    let mut accepted: Vec<Vec<Complex64>> = Vec::new();
    for r in roots {
        let mut values = fixed.clone();
        values.extend(free.iter().cloned().zip(r.iter().copied()));
        let ok = numeric_residuals(system, &values)
            .map(|v| v.iter().all(|x| *x < cfg.tol))
            .unwrap_or(false);
        if !ok {
            continue;
        }
        let dup = accepted.iter().any(|a| {
            a.iter()
                .zip(&r)
                .map(|(p, q)| (p - q).norm_sqr())
                .sum::<f64>()
                .sqrt()
                < cfg.dedup
        });
        if !dup {
            accepted.push(r);
        }
    }
    let key = |r: &Vec<Complex64>| -> Vec<(i64, i64)> {
        r.iter()
            .map(|z| ((z.re * 1e6).round() as i64, (z.im * 1e6).round() as i64))
            .collect()
    };
    accepted.sort_by_key(key);

    let is_constant =
        |r: &Vec<Complex64>| pinned_shape_zero && shape.iter().all(|&i| r[i].norm() < cfg.dedup);
    let before = accepted.len();
    if !cfg.keep_constant {
        accepted.retain(|r| !is_constant(r));
    }
    let constant_roots = before - accepted.len();

    let candidates = accepted
        .into_iter()
        .map(|r| {
            let mut numeric: BTreeMap<Symbol, Complex64> =
                pinned.iter().map(|(k, v)| (k.clone(), *v)).collect();
            numeric.extend(free.iter().cloned().zip(r));
            Candidate {
                source: "solver".into(),
                numeric,
                ..Candidate::default()
            }
        })
        .collect();
    Ok(SolveOutcome {
        unknowns: free,
        candidates,
        converged_starts,
        constant_roots,
    })
}
