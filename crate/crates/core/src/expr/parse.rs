//! Recursive-descent parser for the expression grammar.
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := ('-' | '+') unary | power
//! power   := primary ('^' unary)?
//! primary := number | ident | ident '(' args ')' | '(' expr ')'
//! ```
//!
//! `i` is the imaginary unit. `D(e, v1, v2, ...)` is a partial derivative
//! marker; repeated variables raise the order.

use std::collections::BTreeSet;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::pow::Pow;

use super::{Expr, Func, Symbol};
use crate::error::{Error, Result};
use crate::number::GaussianRational;

/// The identifiers an expression may reference.
#[derive(Clone, Debug, Default)]
pub struct Scope {
    names: BTreeSet<String>,
    open: bool,
}

impl Scope {
    pub fn new<I, S>(names: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        Scope {
            names: names.into_iter().map(|s| s.as_ref().to_string()).collect(),
            open: false,
        }
    }

    /// A scope that accepts every identifier.
    pub fn open() -> Self {
        Scope {
            names: BTreeSet::new(),
            open: true,
        }
    }

    pub fn declare(&mut self, name: &str) {
        self.names.insert(name.to_string());
    }

    pub fn contains(&self, name: &str) -> bool {
        self.open || self.names.contains(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.names.iter().map(String::as_str)
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(BigRational),
    Ident(String),
    Op(char),
}

fn lex(text: &str) -> Result<Vec<(Tok, usize)>> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut pos = 0;
    while pos < bytes.len() {
        let c = bytes[pos] as char;
        if c.is_ascii_whitespace() {
            pos += 1;
        } else if c.is_ascii_digit()
            || (c == '.' && bytes.get(pos + 1).is_some_and(u8::is_ascii_digit))
        {
            let start = pos;
            while pos < bytes.len() && bytes[pos].is_ascii_digit() {
                pos += 1;
            }
            let mut frac_digits = 0u32;
            if pos < bytes.len() && bytes[pos] == b'.' {
                pos += 1;
                while pos < bytes.len() && bytes[pos].is_ascii_digit() {
                    pos += 1;
                    frac_digits += 1;
                }
            }
            let digits: String = text[start..pos].chars().filter(|ch| *ch != '.').collect();
            let numer: BigInt = digits.parse().map_err(|_| Error::Syntax {
                pos: start,
                msg: "malformed number".into(),
            })?;
            let denom = BigInt::from(10).pow(frac_digits);
            out.push((Tok::Num(BigRational::new(numer, denom)), start));
        } else if c.is_ascii_alphabetic() {
            let start = pos;
            while pos < bytes.len() && (bytes[pos].is_ascii_alphanumeric() || bytes[pos] == b'_') {
                pos += 1;
            }
            out.push((Tok::Ident(text[start..pos].to_string()), start));
        } else if "+-*/^(),".contains(c) {
            out.push((Tok::Op(c), pos));
            pos += 1;
        } else {
            return Err(Error::Syntax {
                pos,
                msg: format!("unexpected character `{c}`"),
            });
        }
    }
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<(Tok, usize)>,
    at: usize,
    end: usize,
    scope: &'a Scope,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.at).map(|(t, _)| t)
    }

    fn pos(&self) -> usize {
        self.toks.get(self.at).map_or(self.end, |(_, p)| *p)
    }

    fn eat(&mut self, op: char) -> bool {
        if self.peek() == Some(&Tok::Op(op)) {
            self.at += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, op: char) -> Result<()> {
        if self.eat(op) {
            Ok(())
        } else {
            Err(Error::Syntax {
                pos: self.pos(),
                msg: format!("expected `{op}`"),
            })
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut acc = self.term()?;
        loop {
            if self.eat('+') {
                acc = acc + self.term()?;
            } else if self.eat('-') {
                acc = acc - self.term()?;
            } else {
                return Ok(acc);
            }
        }
    }

    /// A whole multiplicative chain becomes one product, so the result does
    /// not depend on how the printer grouped its factors.
    fn term(&mut self) -> Result<Expr> {
        let mut factors = Vec::new();
        loop {
            if self.eat('-') {
                factors.push(Expr::int(-1));
            } else if !self.eat('+') {
                break;
            }
        }
        factors.push(self.unary()?);
        loop {
            if self.eat('*') {
                factors.push(self.unary()?);
            } else if self.eat('/') {
                factors.push(Expr::recip(self.unary()?));
            } else {
                return Ok(Expr::product(factors));
            }
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.eat('-') {
            return Ok(-self.unary()?);
        }
        if self.eat('+') {
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.primary()?;
        if self.eat('^') {
            let exp = self.unary()?;
            return Ok(Expr::pow(base, exp));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Expr> {
        let pos = self.pos();
        let Some((tok, _)) = self.toks.get(self.at).cloned() else {
            return Err(Error::Syntax {
                pos,
                msg: "unexpected end of input".into(),
            });
        };
        self.at += 1;
        match tok {
            Tok::Num(v) => Ok(Expr::num(GaussianRational::real(v))),
            Tok::Op('(') => {
                let e = self.expr()?;
                self.expect(')')?;
                Ok(e)
            }
            Tok::Op(c) => Err(Error::Syntax {
                pos,
                msg: format!("unexpected `{c}`"),
            }),
            Tok::Ident(name) => self.identifier(name, pos),
        }
    }

    fn identifier(&mut self, name: String, pos: usize) -> Result<Expr> {
        let call = self.peek() == Some(&Tok::Op('('));
        if name == "D" && call {
            self.at += 1;
            let inner = self.expr()?;
            let mut vars = Vec::new();
            while self.eat(',') {
                let vpos = self.pos();
                match self.toks.get(self.at).cloned() {
                    Some((Tok::Ident(v), _)) => {
                        self.at += 1;
                        if !self.scope.contains(&v) {
                            return Err(Error::Undeclared { name: v, pos: vpos });
                        }
                        vars.push((Symbol::new(&v), 1));
                    }
                    _ => {
                        return Err(Error::Syntax {
                            pos: vpos,
                            msg: "expected a variable name".into(),
                        })
                    }
                }
            }
            self.expect(')')?;
            if vars.is_empty() {
                return Err(Error::Syntax {
                    pos,
                    msg: "D() needs at least one variable".into(),
                });
            }
            return Ok(Expr::deriv(inner, &vars));
        }
        let func = Func::from_name(&name);
        if call && (func.is_some() || name == "sqrt") {
            self.at += 1;
            let arg = self.expr()?;
            self.expect(')')?;
            return Ok(match func {
                Some(f) => Expr::func(f, arg),
                None => Expr::sqrt(arg),
            });
        }
        if func.is_some() || name == "sqrt" || name == "D" {
            return Err(Error::Syntax {
                pos,
                msg: format!("`{name}` must be applied to arguments"),
            });
        }
        if name == "i" {
            return Ok(Expr::i());
        }
        if !self.scope.contains(&name) {
            return Err(Error::Undeclared { name, pos });
        }
        Ok(Expr::sym(&name))
    }
}

/// Parses `text` against the identifiers in `scope`.
pub fn parse_expr(text: &str, scope: &Scope) -> Result<Expr> {
    let toks = lex(text)?;
    let mut p = Parser {
        toks,
        at: 0,
        end: text.len(),
        scope,
    };
    let e = p.expr()?;
    if p.at != p.toks.len() {
        return Err(Error::Syntax {
            pos: p.pos(),
            msg: "trailing input".into(),
        });
    }
    Ok(e)
}
