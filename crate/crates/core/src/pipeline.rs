//! The full derivation chain from a problem file to its algebraic system.

use crate::balance::{compute_balance, power_transform, Balance};
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::meda::{derive_system, AlgebraicSystem};
use crate::pde::{reduce_auto, PdeProblem, TravelingWaveOde};

#[derive(Clone, Debug, Default)]
pub enum TransformChoice {
    /// Refuse a non-integer balance.
    #[default]
    Never,
    /// Use the transform suggested by the balance when needed.
    Auto,
    Explicit(Expr),
}

#[derive(Clone, Debug, Default)]
pub struct DeriveOptions {
    pub transform: TransformChoice,
    pub m: Option<i64>,
    /// Integration constants (zero when absent).
    pub constants: Vec<Expr>,
}

#[derive(Clone, Debug)]
pub struct Derivation {
    pub problem: PdeProblem,
    /// After reduction, integration and elimination.
    pub reduced: TravelingWaveOde,
    pub balance: Balance,
    /// The equation the expansion is applied to (transformed if needed).
    pub working: TravelingWaveOde,
    pub m: i64,
    pub system: AlgebraicSystem,
}

pub fn derive(problem: &PdeProblem, opts: &DeriveOptions) -> Result<Derivation> {
    let reduced = reduce_auto(problem, &opts.constants)?;
    let balance = compute_balance(&reduced)?;
    let transform = match (&opts.transform, balance.is_integer()) {
        (TransformChoice::Explicit(p), _) => Some(p.clone()),
        (_, true) => None,
        (TransformChoice::Auto, false) => Some(balance.suggested_transform().ok_or_else(|| {
            Error::Balance(format!("no transform makes M = {balance} an integer"))
        })?),
        (TransformChoice::Never, false) => {
            let hint = balance
                .suggested_transform()
                .map(|p| format!("; try --transform \"{p}\""))
                .unwrap_or_default();
            return Err(Error::Balance(format!(
                "M = {balance} is not an integer{hint}"
            )));
        }
    };
    let working = match &transform {
        Some(p) => power_transform(&reduced, p)?,
        None => reduced.clone(),
    };
    let m = match opts.m {
        Some(m) => m,
        None => {
            let b = compute_balance(&working)?;
            b.as_integer().ok_or_else(|| {
                Error::Balance(format!("M = {b} is not an integer after the transform"))
            })?
        }
    };
    let system = derive_system(&working, m)?;
    Ok(Derivation {
        problem: problem.clone(),
        reduced,
        balance,
        working,
        m,
        system,
    })
}
