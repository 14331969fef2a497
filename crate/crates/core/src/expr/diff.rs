use std::collections::BTreeSet;

use super::{Expr, Func, Node, Symbol};
use crate::error::{Error, Result};

/// d/d`var` treating every other symbol as a constant.
pub fn differentiate(e: &Expr, var: &Symbol) -> Result<Expr> {
    differentiate_with(e, var, &BTreeSet::new())
}

/// d/d`var` where the symbols in `dependents` are unknown functions of
/// `var`; their derivatives become markers `D(f, var, k)`.
pub fn differentiate_with(e: &Expr, var: &Symbol, dependents: &BTreeSet<Symbol>) -> Result<Expr> {
    let depends = |x: &Expr| x.contains_symbol(var) || x.contains_any(dependents);
    Ok(match e.node() {
        Node::Num(_) => Expr::zero(),
        Node::Sym(s) if s == var => Expr::one(),
        Node::Sym(s) if dependents.contains(s) => Expr::deriv(e.clone(), &[(var.clone(), 1)]),
        Node::Sym(_) => Expr::zero(),
        Node::Add(ts) => {
            let parts: Result<Vec<_>> = ts
                .iter()
                .map(|t| differentiate_with(t, var, dependents))
                .collect();
            Expr::sum(parts?)
        }
        Node::Mul(fs) => {
            let mut terms = Vec::with_capacity(fs.len());
            for (k, f) in fs.iter().enumerate() {
                if !depends(f) {
                    continue;
                }
                let df = differentiate_with(f, var, dependents)?;
                if df.is_zero() {
                    continue;
                }
                let mut prod: Vec<Expr> = fs
                    .iter()
                    .enumerate()
                    .filter(|(j, _)| *j != k)
                    .map(|(_, g)| g.clone())
                    .collect();
                prod.push(df);
                terms.push(Expr::product(prod));
            }
            Expr::sum(terms)
        }
        Node::Pow(b, x) => {
            if depends(x) {
                return Err(Error::Unsupported(format!(
                    "exponent of `{e}` depends on {var}"
                )));
            }
            let db = differentiate_with(b, var, dependents)?;
            if db.is_zero() {
                return Ok(Expr::zero());
            }
            Expr::product([x.clone(), Expr::pow(b.clone(), x - &Expr::one()), db])
        }
        Node::Func(f, a) => {
            let da = differentiate_with(a, var, dependents)?;
            if da.is_zero() {
                return Ok(Expr::zero());
            }
            let sq = Expr::powi(e.clone(), 2);
            let outer = match f {
                Func::Tan => Expr::one() + sq,
                Func::Cot => -(Expr::one() + sq),
                Func::Tanh | Func::Coth => Expr::one() - sq,
            };
            outer * da
        }
        Node::Deriv(w, _) => {
            if depends(w) {
                Expr::deriv(e.clone(), &[(var.clone(), 1)])
            } else {
                Expr::zero()
            }
        }
    })
}
