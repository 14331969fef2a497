//! Rendering in the input grammar (re-parseable) and a Unicode
//! presentation form for reports.

use std::fmt::{self, Write};

use num_traits::Signed;

use super::{coeff_is_negative, half, Expr, Node};
use crate::number::GaussianRational;

const PREC_ADD: u8 = 1;
const PREC_MUL: u8 = 2;
const PREC_POW: u8 = 3;
const PREC_ATOM: u8 = 4;

fn precedence(e: &Expr) -> u8 {
    match e.node() {
        Node::Add(_) => PREC_ADD,
        Node::Mul(_) => PREC_MUL,
        Node::Num(c) => {
            if c.is_real() && !c.re().is_negative() && c.re().is_integer() {
                PREC_ATOM
            } else if c.is_real() && !c.re().is_negative() {
                // `1/2` binds like a quotient
                PREC_MUL
            } else {
                PREC_ADD
            }
        }
        Node::Pow(_, x) => {
            if is_half(x) {
                PREC_ATOM
            } else if x.as_rational().is_some_and(|q| q.is_negative()) {
                PREC_MUL
            } else {
                PREC_POW
            }
        }
        Node::Sym(_) | Node::Func(..) | Node::Deriv(..) => PREC_ATOM,
    }
}

fn is_half(e: &Expr) -> bool {
    e.as_rational().is_some_and(|q| *q == half())
}

fn write_wrapped(f: &mut impl Write, e: &Expr, min_prec: u8) -> fmt::Result {
    if precedence(e) < min_prec {
        write!(f, "(")?;
        write_expr(f, e)?;
        write!(f, ")")
    } else {
        write_expr(f, e)
    }
}

fn write_expr(f: &mut impl Write, e: &Expr) -> fmt::Result {
    match e.node() {
        Node::Num(c) => write!(f, "{c}"),
        Node::Sym(s) => write!(f, "{s}"),
        Node::Add(ts) => {
            for (k, t) in ts.iter().enumerate() {
                let (c, rest) = t.split_coeff();
                if k > 0 && coeff_is_negative(&c) {
                    write!(f, " - ")?;
                    write_wrapped(f, &Expr::product([Expr::num(-c), rest]), PREC_MUL)?;
                } else {
                    if k > 0 {
                        write!(f, " + ")?;
                        write_wrapped(f, t, PREC_MUL)?;
                    } else {
                        write_expr(f, t)?;
                    }
                }
            }
            Ok(())
        }
        Node::Mul(_) => write_product(f, e),
        Node::Pow(b, x) => {
            if is_half(x) {
                write!(f, "sqrt(")?;
                write_expr(f, b)?;
                return write!(f, ")");
            }
            if x.as_rational().is_some_and(|q| q.is_negative()) {
                return write_product(f, e);
            }
            write_wrapped(f, b, PREC_ATOM)?;
            write!(f, "^")?;
            if x.as_integer().is_some_and(|k| k >= 0) || x.as_sym().is_some() {
                write_expr(f, x)
            } else {
                write!(f, "(")?;
                write_expr(f, x)?;
                write!(f, ")")
            }
        }
        Node::Func(g, a) => {
            write!(f, "{}(", g.name())?;
            write_expr(f, a)?;
            write!(f, ")")
        }
        Node::Deriv(w, vs) => {
            write!(f, "D(")?;
            write_expr(f, w)?;
            for (v, k) in vs {
                for _ in 0..*k {
                    write!(f, ", {v}")?;
                }
            }
            write!(f, ")")
        }
    }
}

/// Products render as `coef*num1*num2/(den1*den2)`.
fn write_product(f: &mut impl Write, e: &Expr) -> fmt::Result {
    let mut coef = GaussianRational::one();
    let mut numer = Vec::new();
    let mut denom = Vec::new();
    for factor in e.factors() {
        match factor.node() {
            Node::Num(c) => coef = &coef * c,
            Node::Pow(b, x) if x.as_rational().is_some_and(|q| q.is_negative()) => {
                let x = -x.clone();
                // a numeric base would fold (0^2 -> 0), so keep it unevaluated
                denom.push(match b.node() {
                    Node::Num(_) if !x.is_one() => Expr::raw(Node::Pow(b.clone(), x)),
                    _ => Expr::pow(b.clone(), x),
                });
            }
            _ => numer.push(factor),
        }
    }
    let mut first = true;
    if coeff_is_negative(&coef) {
        write!(f, "-")?;
        coef = -coef;
    }
    if !coef.is_one() || numer.is_empty() {
        write!(f, "{coef}")?;
        first = false;
    }
    for n in &numer {
        if !first {
            write!(f, "*")?;
        }
        write_wrapped(f, n, PREC_POW)?;
        first = false;
    }
    if !denom.is_empty() {
        write!(f, "/")?;
        if denom.len() == 1 {
            write_wrapped(f, &denom[0], PREC_POW)?;
        } else {
            write!(f, "(")?;
            for (k, d) in denom.iter().enumerate() {
                if k > 0 {
                    write!(f, "*")?;
                }
                write_wrapped(f, d, PREC_POW)?;
            }
            write!(f, ")")?;
        }
    }
    Ok(())
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        write_expr(&mut s, self)?;
        f.write_str(&s)
    }
}

/// Presentation form: Greek parameter names, `√`, `·`.
pub fn pretty(e: &Expr) -> String {
    let text = e.to_string();
    let mut out = String::with_capacity(text.len());
    let mut ident = String::new();
    let flush = |ident: &mut String, out: &mut String| {
        if ident.is_empty() {
            return;
        }
        let mapped = match ident.as_str() {
            "alpha" => "α",
            "beta" => "β",
            "lambda" => "λ",
            "phi" => "φ",
            "sqrt" => "√",
            other => other,
        };
        out.push_str(mapped);
        ident.clear();
    };
    for ch in text.chars() {
        if ch.is_ascii_alphanumeric() || ch == '_' {
            ident.push(ch);
            continue;
        }
        flush(&mut ident, &mut out);
        out.push(if ch == '*' { '·' } else { ch });
    }
    flush(&mut ident, &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Symbol;

    #[test]
    fn renders_grammar_text() {
        let x = Expr::sym("x");
        let n = Expr::sym("n");
        assert_eq!((Expr::int(2) * &x).to_string(), "2*x");
        assert_eq!((&x - Expr::int(1)).to_string(), "-1 + x");
        assert_eq!(
            Expr::pow(x.clone(), &n - Expr::one()).to_string(),
            "x^(-1 + n)"
        );
        assert_eq!(Expr::recip(&x + &n).to_string(), "1/(n + x)");
        assert_eq!(Expr::powi(Expr::int(0), -2).to_string(), "1/0");
        assert_eq!(Expr::sqrt(x.clone()).to_string(), "sqrt(x)");
        assert_eq!((Expr::rational(1, 2) * &x).to_string(), "1/2*x");
        let d = Expr::deriv(
            Expr::sym("u"),
            &[(Symbol::new("x"), 2), (Symbol::new("t"), 1)],
        );
        assert_eq!(d.to_string(), "D(u, t, x, x)");
    }

    #[test]
    fn pretty_uses_unicode() {
        let e = Expr::sym("alpha") * Expr::sqrt(Expr::sym("lambda"));
        assert_eq!(pretty(&e), "α·√(λ)");
    }
}
