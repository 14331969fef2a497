pub mod algsolve;
pub mod balance;
pub mod compat;
pub mod error;
pub mod expr;
pub mod meda;
pub mod number;
pub mod pde;
pub mod pipeline;
pub mod poly;
pub mod solution;
pub mod verify;

pub use error::{Error, Result};
