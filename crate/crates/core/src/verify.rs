//! Numeric residuals of closed-form solutions, evaluated directly on the
//! problem's equations. Nothing here depends on how a solution was found.

use std::collections::BTreeMap;
use std::str::FromStr;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::expr::{differentiate, eval_complex, Bindings, Expr, Node, Symbol};
use crate::pde::{PdeProblem, TravelingWaveOde};

/// Exact parameter values, substituted symbolically before evaluation.
pub type ParamValues = BTreeMap<Symbol, Expr>;

pub const RESIDUAL_TOL: f64 = 1e-8;
const FD_STEP: f64 = 1e-5;
const FD_POINTS: usize = 5;
const FD_TOL: f64 = 1e-4;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Grid {
    pub x: (f64, f64, usize),
    pub t: (f64, f64, usize),
}

impl Default for Grid {
    fn default() -> Self {
        Grid {
            x: (-2.0, 2.0, 21),
            t: (0.0, 1.0, 11),
        }
    }
}

impl Grid {
    pub fn len(&self) -> usize {
        self.x.2 * self.t.2
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Points in row-major order (t outer, x inner).
    pub fn points(&self) -> Vec<(f64, f64)> {
        let axis = |(a, b, n): (f64, f64, usize)| -> Vec<f64> {
            if n == 1 {
                return vec![a];
            }
            (0..n)
                .map(|k| a + (b - a) * k as f64 / (n - 1) as f64)
                .collect()
        };
        let xs = axis(self.x);
        axis(self.t)
            .into_iter()
            .flat_map(|t| xs.iter().map(move |&x| (x, t)))
            .collect()
    }
}

impl FromStr for Grid {
    type Err = Error;

    /// `x0:x1:nx,t0:t1:nt`
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Residual(format!("grid `{s}` is not of the form x0:x1:nx,t0:t1:nt"));
        let axis = |part: &str| -> Result<(f64, f64, usize)> {
            let f: Vec<&str> = part.trim().split(':').collect();
            let [a, b, n] = f.as_slice() else {
                return Err(bad());
            };
            let (a, b, n): (f64, f64, usize) = (
                a.parse().map_err(|_| bad())?,
                b.parse().map_err(|_| bad())?,
                n.parse().map_err(|_| bad())?,
            );
            if n == 0 || a.is_nan() || b.is_nan() || a > b {
                return Err(bad());
            }
            Ok((a, b, n))
        };
        let (x, t) = s.split_once(',').ok_or_else(bad)?;
        Ok(Grid {
            x: axis(x)?,
            t: axis(t)?,
        })
    }
}

#[derive(Clone, Debug, Serialize)]
#[serde(untagged)]
pub enum Sampling {
    Grid(Grid),
    Samples { z_samples: usize },
}

#[derive(Clone, Debug, Serialize)]
pub struct EquationResidual {
    pub max: f64,
    pub mean: f64,
    /// `(x, t)`, or `(Re z, Im z)` for ODE samples.
    pub worst_point: Option<(f64, f64)>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ResidualReport {
    pub grid: Sampling,
    pub evaluated: usize,
    pub skipped: usize,
    pub per_equation: Vec<EquationResidual>,
}

impl ResidualReport {
    pub fn max(&self) -> f64 {
        self.per_equation.iter().map(|e| e.max).fold(0.0, f64::max)
    }

    pub fn skipped_fraction(&self) -> f64 {
        let total = self.evaluated + self.skipped;
        if total == 0 {
            1.0
        } else {
            self.skipped as f64 / total as f64
        }
    }

    fn reduce(
        grid: Sampling,
        points: &[(f64, f64)],
        values: Vec<Option<Vec<f64>>>,
        n_eq: usize,
    ) -> Result<Self> {
        let mut per: Vec<EquationResidual> = (0..n_eq)
            .map(|_| EquationResidual {
                max: 0.0,
                mean: 0.0,
                worst_point: None,
            })
            .collect();
        let mut evaluated = 0;
        let mut skipped = 0;
        for (pt, v) in points.iter().zip(values) {
            let Some(v) = v else {
                skipped += 1;
                continue;
            };
            evaluated += 1;
            for (slot, r) in per.iter_mut().zip(v) {
                slot.mean += r;
                if slot.worst_point.is_none() || r > slot.max {
                    slot.max = r;
                    slot.worst_point = Some(*pt);
                }
            }
        }
        if evaluated == 0 {
            return Err(Error::Residual("every sample point was skipped".into()));
        }
        for slot in &mut per {
            slot.mean /= evaluated as f64;
        }
        Ok(ResidualReport {
            grid,
            evaluated,
            skipped,
            per_equation: per,
        })
    }
}

/// Evaluates, mapping pole proximity and non-finite values to `None`.
fn eval_guarded(e: &Expr, b: &Bindings) -> Result<Option<Complex64>> {
    match eval_complex(e, b) {
        Ok(v) if v.re.is_finite() && v.im.is_finite() => Ok(Some(v)),
        Ok(_) | Err(Error::Pole) => Ok(None),
        Err(err) => Err(Error::Residual(err.to_string())),
    }
}

/// A derivative marker's argument and its variable sequence.
type Marker = (Expr, Vec<Symbol>);

/// Replaces each derivative marker by the symbolic derivative of its
/// argument after `subs`; every marker is also returned with the variable
/// sequence, for the finite-difference cross-check.
fn realize(eq: &Expr, subs: &BTreeMap<Symbol, Expr>) -> Result<(Expr, Vec<Marker>)> {
    let mut markers = Vec::new();
    let mut failure = None;
    let out = eq.replace(&mut |node| {
        let Node::Deriv(w, vs) = node.node() else {
            return None;
        };
        let inner = w.substitute(subs);
        let seq: Vec<Symbol> = vs
            .iter()
            .flat_map(|(v, k)| std::iter::repeat_n(v.clone(), *k as usize))
            .collect();
        let mut acc = inner.clone();
        for v in &seq {
            match differentiate(&acc, v) {
                Ok(d) => acc = d,
                Err(e) => {
                    failure.get_or_insert(e);
                    return Some(node.clone());
                }
            }
        }
        markers.push((inner, seq));
        Some(acc)
    });
    match failure {
        Some(e) => Err(e),
        None => Ok((out.substitute(subs), markers)),
    }
}

/// Compares each symbolic derivative step with a central difference of the
/// previous step at a few random points.
fn cross_check(
    markers: &[(Expr, Vec<Symbol>)],
    sample: impl Fn(&mut ChaCha8Rng) -> Bindings,
) -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    for (inner, seq) in markers {
        let mut chain = vec![inner.clone()];
        for v in seq {
            chain.push(differentiate(chain.last().unwrap(), v)?);
        }
        let mut checked = 0;
        let mut tries = 0;
        while checked < FD_POINTS && tries < 20 * FD_POINTS {
            tries += 1;
            let at = sample(&mut rng);
            let mut ok = true;
            let mut rows = Vec::new();
            for (k, v) in seq.iter().enumerate() {
                let h = Complex64::new(FD_STEP, 0.0);
                let mut plus = at.clone();
                let mut minus = at.clone();
                let base = at.get(v).copied().unwrap_or_default();
                plus.insert(v.clone(), base + h);
                minus.insert(v.clone(), base - h);
                let (Some(fp), Some(fm), Some(sym)) = (
                    eval_guarded(&chain[k], &plus)?,
                    eval_guarded(&chain[k], &minus)?,
                    eval_guarded(&chain[k + 1], &at)?,
                ) else {
                    ok = false;
                    break;
                };
                rows.push((sym, (fp - fm) / (2.0 * h), v));
            }
            if !ok {
                continue;
            }
            for (sym, fd, v) in rows {
                if (sym - fd).norm() > FD_TOL * sym.norm().max(1.0) {
                    return Err(Error::CrossCheck(format!(
                        "d/d{v} of {inner}: symbolic {sym}, finite difference {fd}"
                    )));
                }
            }
            checked += 1;
        }
    }
    Ok(())
}

/// Residual of the original PDEs at the given fields u(x,t) (and v).
pub fn pde_residual(
    problem: &PdeProblem,
    fields: &[(Symbol, Expr)],
    grid: &Grid,
    params: &ParamValues,
) -> Result<ResidualReport> {
    let mut subs: BTreeMap<Symbol, Expr> = BTreeMap::new();
    for u in &problem.unknowns {
        let f = fields
            .iter()
            .find(|(k, _)| k == u)
            .map(|(_, e)| e.substitute(params))
            .ok_or_else(|| Error::Residual(format!("no field given for `{u}`")))?;
        subs.insert(u.clone(), f);
    }
    let mut equations = Vec::new();
    let mut markers = Vec::new();
    for eq in &problem.equations {
        let (e, m) = realize(&eq.substitute(params), &subs)?;
        equations.push(e);
        markers.extend(m);
    }
    let (x, t) = (problem.x.clone(), problem.t.clone());
    let bind = |px: f64, pt: f64| {
        Bindings::from([
            (x.clone(), Complex64::new(px, 0.0)),
            (t.clone(), Complex64::new(pt, 0.0)),
        ])
    };

    let (gx, gt) = (grid.x, grid.t);
    cross_check(&markers, |rng| {
        bind(rng.random_range(gx.0..=gx.1), rng.random_range(gt.0..=gt.1))
    })?;

    let points = grid.points();
    let values: Vec<Option<Vec<f64>>> = points
        .par_iter()
        .map(|&(px, pt)| -> Result<Option<Vec<f64>>> {
            let b = bind(px, pt);
            let mut out = Vec::with_capacity(equations.len());
            for e in &equations {
                match eval_guarded(e, &b)? {
                    Some(v) => out.push(v.norm()),
                    None => return Ok(None),
                }
            }
            Ok(Some(out))
        })
        .collect::<Result<_>>()?;
    ResidualReport::reduce(Sampling::Grid(*grid), &points, values, equations.len())
}

/// `n` points `z = i·s` with `s` evenly spaced in [-2, 2].
pub fn default_z_samples(n: usize) -> Vec<Complex64> {
    (0..n)
        .map(|k| Complex64::new(0.0, -2.0 + 4.0 * k as f64 / (n.max(2) - 1) as f64))
        .collect()
}

/// Residual of the reduced ODE(s) at profile expressions in z.
pub fn ode_residual(
    ode: &TravelingWaveOde,
    solution: &[(Symbol, Expr)],
    z_samples: &[Complex64],
    params: &ParamValues,
) -> Result<ResidualReport> {
    let subs: BTreeMap<Symbol, Expr> = solution
        .iter()
        .map(|(k, e)| (k.clone(), e.substitute(params)))
        .collect();
    for p in &ode.profiles {
        if !subs.contains_key(p) {
            return Err(Error::Residual(format!("no profile given for `{p}`")));
        }
    }
    let equations: Vec<Expr> = ode
        .equations
        .iter()
        .map(|e| realize(&e.substitute(params), &subs).map(|r| r.0))
        .collect::<Result<_>>()?;
    let points: Vec<(f64, f64)> = z_samples.iter().map(|z| (z.re, z.im)).collect();
    let values: Vec<Option<Vec<f64>>> = z_samples
        .par_iter()
        .map(|z| -> Result<Option<Vec<f64>>> {
            let b = Bindings::from([(ode.z.clone(), *z)]);
            let mut out = Vec::with_capacity(equations.len());
            for e in &equations {
                match eval_guarded(e, &b)? {
                    Some(v) => out.push(v.norm()),
                    None => return Ok(None),
                }
            }
            Ok(Some(out))
        })
        .collect::<Result<_>>()?;
    ResidualReport::reduce(
        Sampling::Samples {
            z_samples: z_samples.len(),
        },
        &points,
        values,
        equations.len(),
    )
}
