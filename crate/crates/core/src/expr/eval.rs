use std::collections::HashMap;

use num_complex::Complex64;

use super::{half, Expr, Func, Node, Symbol};
use crate::error::{Error, Result};

/// Minimum magnitude of the denominator of tan/cot/tanh/coth (|cos|, |sin|,
/// |cosh|, |sinh|) before evaluation reports a pole.
pub const POLE_GUARD: f64 = 1e-6;

/// Negative powers of bases smaller than this are treated as poles.
const ZERO_BASE_GUARD: f64 = 1e-12;

pub type Bindings = HashMap<Symbol, Complex64>;

/// Double-precision complex evaluation. Square roots and fractional powers
/// use the principal branch.
pub fn eval_complex(e: &Expr, bindings: &Bindings) -> Result<Complex64> {
    match e.node() {
        Node::Num(c) => Ok(c.to_complex64()),
        Node::Sym(s) => bindings
            .get(s)
            .copied()
            .ok_or_else(|| Error::Unbound(s.to_string())),
        Node::Add(ts) => ts.iter().try_fold(Complex64::new(0.0, 0.0), |acc, t| {
            Ok(acc + eval_complex(t, bindings)?)
        }),
        Node::Mul(fs) => fs.iter().try_fold(Complex64::new(1.0, 0.0), |acc, f| {
            Ok(acc * eval_complex(f, bindings)?)
        }),
        Node::Pow(b, x) => {
            let base = eval_complex(b, bindings)?;
            if let Some(k) = x.as_integer() {
                if k < 0 && base.norm() < ZERO_BASE_GUARD {
                    return Err(Error::Pole);
                }
                return Ok(int_pow(base, k));
            }
            if x.as_rational().is_some_and(|q| *q == half()) {
                return Ok(base.sqrt());
            }
            let exp = eval_complex(x, bindings)?;
            if base.norm() < ZERO_BASE_GUARD {
                return if exp.re > 0.0 {
                    Ok(Complex64::new(0.0, 0.0))
                } else {
                    Err(Error::Pole)
                };
            }
            Ok((exp * base.ln()).exp())
        }
        Node::Func(f, a) => {
            let w = eval_complex(a, bindings)?;
            let (num, den) = match f {
                Func::Tan => (w.sin(), w.cos()),
                Func::Cot => (w.cos(), w.sin()),
                Func::Tanh => (w.sinh(), w.cosh()),
                Func::Coth => (w.cosh(), w.sinh()),
            };
            if den.norm() < POLE_GUARD {
                return Err(Error::Pole);
            }
            Ok(num / den)
        }
        Node::Deriv(..) => Err(Error::UnexpandedDerivative(e.to_string())),
    }
}

fn int_pow(z: Complex64, k: i64) -> Complex64 {
    let mut base = if k < 0 { z.inv() } else { z };
    let mut n = k.unsigned_abs();
    let mut acc = Complex64::new(1.0, 0.0);
    while n > 0 {
        if n & 1 == 1 {
            acc *= base;
        }
        base *= base;
        n >>= 1;
    }
    acc
}
