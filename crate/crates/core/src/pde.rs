//! Problem files, the complex traveling-wave reduction and the structural
//! manipulations (once-integration, elimination) applied to the reduced
//! equations.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

use crate::error::{Error, Result};
use crate::expr::{differentiate, differentiate_with, parse_expr, Expr, Node, Scope, Symbol};
use crate::number::GaussianRational;
use crate::poly::expand_normalize;

/// `z = i(x + sign·speed·t)`.
#[derive(Clone, Debug, PartialEq)]
pub struct WaveSpec {
    pub sign: i8,
    pub speed: Symbol,
}

impl WaveSpec {
    /// The wave variable in terms of the independent variables.
    pub fn z_expr(&self, x: &Symbol, t: &Symbol) -> Expr {
        let s = Expr::int(self.sign.into());
        Expr::i() * (Expr::symbol(x) + s * Expr::symbol(&self.speed) * Expr::symbol(t))
    }
}

impl fmt::Display for WaveSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let op = if self.sign < 0 { '-' } else { '+' };
        write!(f, "z = i*(x {op} {}*t)", self.speed)
    }
}

#[derive(Clone, Debug)]
pub struct PdeProblem {
    pub name: String,
    pub x: Symbol,
    pub t: Symbol,
    pub unknowns: Vec<Symbol>,
    pub params: Vec<Symbol>,
    /// Parameters declared strictly positive.
    pub positive: Vec<Symbol>,
    pub equations: Vec<Expr>,
    pub wave: WaveSpec,
}

impl PdeProblem {
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    /// Parses the line-oriented problem format.
    pub fn parse(text: &str) -> Result<Self> {
        let mut name = None;
        let mut vars: Option<(Symbol, Symbol)> = None;
        let mut unknowns = Vec::new();
        let mut params = Vec::new();
        let mut positive = Vec::new();
        let mut eq_lines = Vec::new();
        let mut wave_line = None;

        for (k, raw) in text.lines().enumerate() {
            let line_no = k + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let dsl = |msg: String| Error::Dsl { line: line_no, msg };
            let (key, rest) = match line.split_once(|c: char| c.is_whitespace() || c == ':') {
                Some((key, rest)) => (key, rest.trim_start_matches(':').trim()),
                None => (line, ""),
            };
            let idents = || -> Result<Vec<Symbol>> {
                rest.split_whitespace()
                    .map(|w| {
                        if is_identifier(w) && w != "i" && w != "D" {
                            Ok(Symbol::new(w))
                        } else {
                            Err(dsl(format!("invalid identifier `{w}`")))
                        }
                    })
                    .collect()
            };
            match key {
                "problem" => {
                    if rest.is_empty() {
                        return Err(dsl("problem needs a name".into()));
                    }
                    name = Some(rest.to_string());
                }
                "vars" => match idents()?.as_slice() {
                    [x, t] => vars = Some((x.clone(), t.clone())),
                    _ => return Err(dsl("expected exactly two variables: `vars x t`".into())),
                },
                "unknowns" => {
                    unknowns = idents()?;
                    if unknowns.is_empty() || unknowns.len() > 2 {
                        return Err(dsl("expected one or two unknowns".into()));
                    }
                }
                "params" => params.extend(idents()?),
                "constraint" => {
                    let parts: Vec<&str> = rest.split_whitespace().collect();
                    match parts.as_slice() {
                        [s, ">", "0"] => positive.push((Symbol::new(s), line_no)),
                        _ => return Err(dsl("expected `constraint <sym> > 0`".into())),
                    }
                }
                "eq" => eq_lines.push((rest.to_string(), line_no)),
                "wave" => wave_line = Some((rest.to_string(), line_no)),
                other => return Err(dsl(format!("unknown keyword `{other}`"))),
            }
        }

        let name = name.ok_or(Error::Dsl {
            line: 0,
            msg: "missing `problem` line".into(),
        })?;
        let (x, t) = vars.ok_or(Error::Dsl {
            line: 0,
            msg: "missing `vars` line".into(),
        })?;
        if unknowns.is_empty() {
            return Err(Error::Dsl {
                line: 0,
                msg: "missing `unknowns` line".into(),
            });
        }
        let (wave_text, wave_no) = wave_line.ok_or(Error::Dsl {
            line: 0,
            msg: "missing wave specification".into(),
        })?;
        let wave =
            parse_wave(&wave_text, &x, &t).map_err(|msg| Error::Dsl { line: wave_no, msg })?;
        if !params.contains(&wave.speed) {
            return Err(Error::Dsl {
                line: wave_no,
                msg: format!("wave speed `{}` is not a declared parameter", wave.speed),
            });
        }

        let mut declared = BTreeSet::new();
        for s in [&x, &t].into_iter().chain(&unknowns).chain(&params) {
            if !declared.insert(s.clone()) {
                return Err(Error::Dsl {
                    line: 0,
                    msg: format!("`{s}` declared twice"),
                });
            }
        }
        for u in &unknowns {
            let profile = profile_name(u);
            if declared.contains(&profile) && &profile != u {
                return Err(Error::Dsl {
                    line: 0,
                    msg: format!("profile name `{profile}` clashes with a declaration"),
                });
            }
        }
        let positive = positive
            .into_iter()
            .map(|(s, line)| {
                if params.contains(&s) {
                    Ok(s)
                } else {
                    Err(Error::Dsl {
                        line,
                        msg: format!("constraint on undeclared parameter `{s}`"),
                    })
                }
            })
            .collect::<Result<Vec<_>>>()?;

        let scope = Scope::new(declared.iter().map(Symbol::name));
        let mut equations = Vec::new();
        for (text, line) in eq_lines {
            let (lhs, rhs) = text.split_once('=').ok_or(Error::Dsl {
                line,
                msg: "equation needs `= 0`".into(),
            })?;
            let parse = |s: &str| {
                parse_expr(s, &scope).map_err(|e| Error::Dsl {
                    line,
                    msg: e.to_string(),
                })
            };
            let e = parse(lhs)? - parse(rhs)?;
            if !e.contains_deriv() {
                return Err(Error::Dsl {
                    line,
                    msg: "equation contains no derivative".into(),
                });
            }
            equations.push(e);
        }
        if equations.is_empty() {
            return Err(Error::Dsl {
                line: 0,
                msg: "no equations".into(),
            });
        }
        Ok(PdeProblem {
            name,
            x,
            t,
            unknowns,
            params,
            positive,
            equations,
            wave,
        })
    }

    /// Profile symbols (`u → U`) in unknown order.
    pub fn profiles(&self) -> Vec<Symbol> {
        self.unknowns.iter().map(profile_name).collect()
    }
}

fn is_identifier(w: &str) -> bool {
    let mut chars = w.chars();
    chars.next().is_some_and(|c| c.is_ascii_alphabetic())
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

fn parse_wave(text: &str, x: &Symbol, t: &Symbol) -> std::result::Result<WaveSpec, String> {
    let compact: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    let bad = || format!("expected `z = i*({x} +|- <speed>*{t})`, got `{text}`");
    let body = compact
        .strip_prefix("z=i*(")
        .and_then(|r| r.strip_suffix(')'))
        .and_then(|r| r.strip_prefix(x.name()))
        .ok_or_else(bad)?;
    let (sign, rest) = match body.chars().next() {
        Some('+') => (1, &body[1..]),
        Some('-') => (-1, &body[1..]),
        _ => return Err(bad()),
    };
    let speed = rest
        .strip_suffix(t.name())
        .and_then(|r| r.strip_suffix('*'))
        .ok_or_else(bad)?;
    if !is_identifier(speed) {
        return Err(bad());
    }
    Ok(WaveSpec {
        sign,
        speed: Symbol::new(speed),
    })
}

pub fn profile_name(u: &Symbol) -> Symbol {
    let mut chars = u.name().chars();
    let first = chars.next().map(|c| c.to_ascii_uppercase()).unwrap_or('U');
    Symbol::new(&format!("{first}{}", chars.as_str()))
}

/// Record of `V = expr(U)` used to reduce a two-profile system.
#[derive(Clone, Debug)]
pub struct Elimination {
    pub var: Symbol,
    pub expr: Expr,
}

/// `U = V^p` substitution applied to a single-profile ODE.
#[derive(Clone, Debug)]
pub struct PowerTransform {
    pub p: Expr,
    /// The new profile symbol (the old one is expressed through it).
    pub new_profile: Symbol,
    pub old_profile: Symbol,
    /// Power of the new profile the equation was multiplied by.
    pub clearing: Expr,
    /// Numeric factor the equation was multiplied by (denominators of p).
    pub scale: Expr,
}

#[derive(Clone, Debug)]
pub struct TravelingWaveOde {
    pub z: Symbol,
    pub profiles: Vec<Symbol>,
    pub params: Vec<Symbol>,
    pub equations: Vec<Expr>,
    pub wave: WaveSpec,
    /// Per reduced equation: PDE residual = factor · ODE residual.
    pub factors: Vec<GaussianRational>,
    /// Integration constants, one per equation, once integrated.
    pub constants: Option<Vec<Expr>>,
    pub elimination: Option<Elimination>,
    pub transform: Option<PowerTransform>,
}

impl TravelingWaveOde {
    pub fn profile(&self) -> &Symbol {
        &self.profiles[0]
    }

    pub fn dependents(&self) -> BTreeSet<Symbol> {
        self.profiles.iter().cloned().collect()
    }

    /// The single equation of a scalar ODE.
    pub fn single(&self) -> Result<&Expr> {
        match self.equations.as_slice() {
            [e] if self.profiles.len() == 1 => Ok(e),
            _ => Err(Error::NotReducible(format!(
                "expected a single-profile equation, have {} equations in {} profiles",
                self.equations.len(),
                self.profiles.len()
            ))),
        }
    }

    /// Equations with every derivative marker expanded by the chain rule.
    pub fn expanded(&self) -> Result<Vec<Expr>> {
        self.equations
            .iter()
            .map(|e| expand_derivatives(e, &self.dependents()))
            .collect()
    }
}

/// Replaces every marker `D(w, z, k)` by the k-fold symbolic derivative of
/// `w`, leaving only markers on the profiles themselves, then expands.
pub fn expand_derivatives(e: &Expr, profiles: &BTreeSet<Symbol>) -> Result<Expr> {
    let mut failure = None;
    let out = e.replace(&mut |node| {
        let Node::Deriv(w, vs) = node.node() else {
            return None;
        };
        if w.as_sym().is_some_and(|s| profiles.contains(s)) {
            return None;
        }
        let mut acc = match expand_derivatives(w, profiles) {
            Ok(v) => v,
            Err(err) => {
                failure.get_or_insert(err);
                return Some(node.clone());
            }
        };
        for (v, k) in vs {
            for _ in 0..*k {
                match differentiate_with(&acc, v, profiles) {
                    Ok(d) => acc = d,
                    Err(err) => {
                        failure.get_or_insert(err);
                        return Some(node.clone());
                    }
                }
            }
        }
        Some(acc)
    });
    match failure {
        Some(err) => Err(err),
        None => Ok(out.expand()),
    }
}

/// Substitutes `u(x,t) = U(z)` with `z = i(x + s·speed·t)`; each reduced
/// equation is divided by `i` when all of its coefficients are imaginary.
pub fn reduce_to_ode(problem: &PdeProblem) -> Result<TravelingWaveOde> {
    let z = Symbol::new("z");
    let profiles = problem.profiles();
    let rename: BTreeMap<Symbol, Expr> = problem
        .unknowns
        .iter()
        .zip(&profiles)
        .map(|(u, p)| (u.clone(), Expr::symbol(p)))
        .collect();
    let unknowns: BTreeSet<Symbol> = problem.unknowns.iter().cloned().collect();
    let dx = Expr::i();
    let dt = Expr::int(problem.wave.sign.into()) * Expr::i() * Expr::symbol(&problem.wave.speed);

    let mut equations = Vec::new();
    let mut factors = Vec::new();
    for eq in &problem.equations {
        let mut failure = None;
        let reduced = eq.replace(&mut |node| {
            let Node::Deriv(w, vs) = node.node() else {
                return None;
            };
            if !w.contains_any(&unknowns) {
                let mut acc = w.clone();
                for (v, k) in vs {
                    for _ in 0..*k {
                        match differentiate(&acc, v) {
                            Ok(d) => acc = d,
                            Err(e) => {
                                failure.get_or_insert(e);
                            }
                        }
                    }
                }
                return Some(acc);
            }
            let mut factor = Expr::one();
            let mut order = 0;
            for (v, k) in vs {
                let d = if *v == problem.x {
                    &dx
                } else if *v == problem.t {
                    &dt
                } else {
                    failure.get_or_insert(Error::NotReducible(format!("derivative in `{v}`")));
                    return Some(node.clone());
                };
                factor = factor * Expr::powi(d.clone(), i64::from(*k));
                order += k;
            }
            Some(factor * Expr::deriv(w.substitute(&rename), &[(z.clone(), order)]))
        });
        if let Some(err) = failure {
            return Err(err);
        }
        let reduced = reduced.substitute(&rename).expand();
        for v in [&problem.x, &problem.t] {
            if reduced.contains_symbol(v) {
                return Err(Error::NotReducible(format!(
                    "explicit `{v}` remains in {reduced}"
                )));
            }
        }
        let imaginary = !reduced.is_zero()
            && reduced.terms().iter().all(|t| {
                let (c, _) = t.split_coeff();
                c.is_imaginary()
            });
        if imaginary {
            equations.push((&reduced * &Expr::num(-GaussianRational::i())).expand());
            factors.push(GaussianRational::i());
        } else {
            equations.push(reduced);
            factors.push(GaussianRational::one());
        }
    }
    Ok(TravelingWaveOde {
        z,
        profiles,
        params: problem.params.clone(),
        equations,
        wave: problem.wave.clone(),
        factors,
        constants: None,
        elimination: None,
        transform: None,
    })
}

/// Antiderivative of one expanded term, or `None` when no pattern applies.
fn integrate_term(term: &Expr, z: &Symbol, profiles: &BTreeSet<Symbol>) -> Option<Expr> {
    let (coef, rest) = term.split_coeff();
    let factors = rest.factors();
    let depends = |f: &Expr| f.contains_any(profiles) || f.contains_symbol(z);
    let (dep, constant): (Vec<Expr>, Vec<Expr>) = factors.into_iter().partition(|f| depends(f));
    let scale = Expr::num(coef) * Expr::product(constant);

    // D(w, z, k) → D(w, z, k − 1)
    if let [single] = dep.as_slice() {
        if let Node::Deriv(w, vs) = single.node() {
            if let [(v, k)] = vs.as_slice() {
                if v == z {
                    let lower = if *k == 1 {
                        w.clone()
                    } else {
                        Expr::deriv(w.clone(), &[(z.clone(), k - 1)])
                    };
                    return Some(scale * lower);
                }
            }
        }
    }

    // U^k · U′ → U^(k+1)/(k+1)
    let mut marker = None;
    let mut power: Option<(Symbol, Expr)> = None;
    for f in &dep {
        match f.node() {
            Node::Deriv(w, vs) if vs.as_slice() == [(z.clone(), 1)] && marker.is_none() => {
                marker = Some(w.as_sym()?.clone());
            }
            Node::Sym(s) if power.is_none() => power = Some((s.clone(), Expr::one())),
            Node::Pow(b, k) if power.is_none() && !k.contains_any(profiles) => {
                power = Some((b.as_sym()?.clone(), k.clone()));
            }
            _ => return None,
        }
    }
    let u = marker?;
    let k = match power {
        None => Expr::zero(),
        Some((s, k)) if s == u => k,
        Some(_) => return None,
    };
    if k.as_integer().is_some_and(|v| v < 0) {
        // k = −1 would need a logarithm; other negatives stay unsupported
        return None;
    }
    let k1 = k + Expr::one();
    Some(scale * Expr::pow(Expr::symbol(&u), k1.clone()) / k1)
}

/// Whether every term of every equation has a structural antiderivative.
pub fn is_integrable(ode: &TravelingWaveOde) -> bool {
    let deps = ode.dependents();
    ode.equations.iter().all(|e| {
        e.terms()
            .iter()
            .all(|t| integrate_term(t, &ode.z, &deps).is_some())
    })
}

/// Integrates each equation once in z; `constants[i]` moves to the right
/// side of equation i (missing entries are zero).
pub fn integrate_once(ode: &TravelingWaveOde, constants: &[Expr]) -> Result<TravelingWaveOde> {
    let deps = ode.dependents();
    let mut equations = Vec::with_capacity(ode.equations.len());
    let mut used = Vec::with_capacity(ode.equations.len());
    for (k, e) in ode.equations.iter().enumerate() {
        let mut parts = Vec::new();
        for t in e.terms() {
            parts.push(
                integrate_term(&t, &ode.z, &deps).ok_or_else(|| Error::Integration {
                    term: t.to_string(),
                })?,
            );
        }
        let c = constants.get(k).cloned().unwrap_or_else(Expr::zero);
        equations.push(Expr::sum(parts) - &c);
        used.push(c);
    }
    Ok(TravelingWaveOde {
        equations,
        constants: Some(used),
        ..ode.clone()
    })
}

/// Solves the equation other than `into` for `var` (it must be linear in
/// `var` and free of its derivatives) and substitutes the result into
/// equation `into`, leaving a single-profile ODE.
pub fn eliminate(ode: &TravelingWaveOde, var: &Symbol, into: usize) -> Result<TravelingWaveOde> {
    if !ode.profiles.contains(var) {
        return Err(Error::Elimination(format!(
            "`{var}` is not a profile of this system"
        )));
    }
    if ode.equations.len() != 2 || ode.profiles.len() != 2 {
        return Err(Error::Elimination(
            "elimination needs two equations in two profiles".into(),
        ));
    }
    if into > 1 {
        return Err(Error::Elimination(format!("no equation with index {into}")));
    }
    let source = &ode.equations[1 - into];
    let deps = ode.dependents();
    let flat = expand_derivatives(source, &deps)?;
    let form = expand_normalize(&flat, std::slice::from_ref(var)).map_err(|_| {
        Error::Elimination(format!("equation is not polynomial in `{var}`: {flat}"))
    })?;
    if form.max_exponent(var) != Some(1)
        || form.min_exponent(var) != Some(0) && form.min_exponent(var) != Some(1)
    {
        return Err(Error::Elimination(format!(
            "equation is not linear in `{var}`: {flat}"
        )));
    }
    let c1 = form.coefficient(&[1]).to_expr();
    let c0 = form.coefficient(&[0]).to_expr();
    let solved = (-c0 / c1).expand();

    let target = ode.equations[into].substitute(&BTreeMap::from([(var.clone(), solved.clone())]));
    let remaining: BTreeSet<Symbol> = deps.iter().filter(|s| *s != var).cloned().collect();
    let mut result = expand_derivatives(&target, &remaining)?;
    if result.contains_symbol(var) {
        return Err(Error::Elimination(format!("`{var}` survives substitution")));
    }
    if leading_terms_negative(&result, &ode.z) {
        result = (-result).expand();
    }
    Ok(TravelingWaveOde {
        profiles: ode.profiles.iter().filter(|s| *s != var).cloned().collect(),
        equations: vec![result],
        factors: vec![GaussianRational::one()],
        elimination: Some(Elimination {
            var: var.clone(),
            expr: solved,
        }),
        ..ode.clone()
    })
}

fn derivative_order(e: &Expr, z: &Symbol) -> u32 {
    match e.node() {
        Node::Deriv(_, vs) => vs.iter().filter(|(v, _)| v == z).map(|(_, k)| *k).sum(),
        _ => e
            .children()
            .iter()
            .map(|c| derivative_order(c, z))
            .max()
            .unwrap_or(0),
    }
}

/// True when every term carrying the top derivative has a negative real
/// coefficient.
fn leading_terms_negative(e: &Expr, z: &Symbol) -> bool {
    let top = derivative_order(e, z);
    if top == 0 {
        return false;
    }
    e.terms()
        .iter()
        .filter(|t| derivative_order(t, z) == top)
        .all(|t| {
            let (c, _) = t.split_coeff();
            c.is_real() && num_traits::Signed::is_negative(c.re())
        })
}

/// The usual pipeline: reduce, integrate once when every term allows it,
/// and eliminate the last profile of a two-profile system.
pub fn reduce_auto(problem: &PdeProblem, constants: &[Expr]) -> Result<TravelingWaveOde> {
    let mut ode = reduce_to_ode(problem)?;
    if is_integrable(&ode) {
        ode = integrate_once(&ode, constants)?;
    }
    if ode.profiles.len() == 2 {
        let var = ode.profiles[1].clone();
        ode = eliminate(&ode, &var, 1)?;
    }
    Ok(ode)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::poly_zero_check;

    const BOUSSINESQ: &str = "\
problem boussinesq
vars x t
unknowns u v
params lambda
eq: D(u, t) + D(v, x) + u*D(u, x) = 0
eq: D(v, t) + D(u*v, x) + D(u, x, x, x) = 0
wave: z = i*(x + lambda*t)
";

    fn ode_expr(text: &str) -> Expr {
        parse_expr(text, &Scope::open()).unwrap()
    }

    fn same(a: &Expr, b: &str) -> bool {
        poly_zero_check(&(a - &ode_expr(b)), &[]).unwrap()
    }

    #[test]
    fn wave_line_forms() {
        let x = Symbol::new("x");
        let t = Symbol::new("t");
        let w = parse_wave("z = i*(x - c*t)", &x, &t).unwrap();
        assert_eq!((w.sign, w.speed.name()), (-1, "c"));
        let w = parse_wave("z=i*(x+lambda*t)", &x, &t).unwrap();
        assert_eq!((w.sign, w.speed.name()), (1, "lambda"));
        assert!(parse_wave("z = x - c*t", &x, &t).is_err());
    }

    #[test]
    fn dsl_errors_report_lines() {
        let text = "problem p\nvars x t\nunknowns u\nparams c\neq: D(u, t) + q = 0\nwave: z = i*(x - c*t)\n";
        match PdeProblem::parse(text) {
            Err(Error::Dsl { line, .. }) => assert_eq!(line, 5),
            other => panic!("{other:?}"),
        }
        let text = "problem p\nvars x t\nunknowns u\nparams c\neq: D(u, t) = 0\n";
        assert!(matches!(PdeProblem::parse(text), Err(Error::Dsl { .. })));
        let text =
            "problem p\nvars x t\nunknowns u\nparams c\neq: u + c = 0\nwave: z = i*(x - c*t)\n";
        assert!(matches!(
            PdeProblem::parse(text),
            Err(Error::Dsl { line: 5, .. })
        ));
    }

    #[test]
    fn boussinesq_chain() {
        let p = PdeProblem::parse(BOUSSINESQ).unwrap();
        let ode = reduce_to_ode(&p).unwrap();
        assert!(same(
            &ode.equations[0],
            "lambda*D(U, z) + D(V, z) + U*D(U, z)"
        ));
        assert!(same(
            &ode.equations[1],
            "lambda*D(V, z) + D(U*V, z) - D(U, z, z, z)"
        ));
        assert_eq!(
            ode.factors,
            vec![GaussianRational::i(), GaussianRational::i()]
        );

        let c1 = Expr::sym("C1");
        let int = integrate_once(&ode, &[c1.clone(), Expr::zero()]).unwrap();
        assert!(same(&int.equations[0], "lambda*U + V + U^2/2 - C1"));
        assert!(same(&int.equations[1], "lambda*V + U*V - D(U, z, z)"));

        let el = eliminate(&int, &Symbol::new("V"), 1).unwrap();
        assert!(same(
            &el.equations[0],
            "D(U, z, z) + U^3/2 + 3/2*lambda*U^2 + (lambda^2 - C1)*U - lambda*C1"
        ));
        let zero = integrate_once(&ode, &[]).unwrap();
        let el = eliminate(&zero, &Symbol::new("V"), 1).unwrap();
        assert!(same(
            &el.equations[0],
            "D(U, z, z) + U^3/2 + 3/2*lambda*U^2 + lambda^2*U"
        ));
    }

    #[test]
    fn elimination_preconditions() {
        let p = PdeProblem::parse(BOUSSINESQ).unwrap();
        let ode = reduce_to_ode(&p).unwrap();
        // before integration V appears only differentiated
        assert!(matches!(
            eliminate(&ode, &Symbol::new("V"), 1),
            Err(Error::Elimination(_))
        ));
        let int = integrate_once(&ode, &[]).unwrap();
        assert!(matches!(
            eliminate(&int, &Symbol::new("W"), 1),
            Err(Error::Elimination(_))
        ));
    }

    #[test]
    fn unmatched_term_blocks_integration() {
        let text = "problem p\nvars x t\nunknowns u\nparams c\neq: D(u, t) + u^2 = 0\nwave: z = i*(x - c*t)\n";
        let ode = reduce_to_ode(&PdeProblem::parse(text).unwrap()).unwrap();
        match integrate_once(&ode, &[]) {
            Err(Error::Integration { term }) => assert!(term.contains("U^2"), "{term}"),
            other => panic!("{other:?}"),
        }
    }
}
