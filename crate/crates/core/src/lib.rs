//! Lower bounds for the 3x+1 problem from difference inequalities.
//!
//! The pipeline builds the inequality system mod `3^k` as trees
//! ([`tree`]), removes advanced terms by back-substitution ([`eliminate`]),
//! compiles linear programs parametrised by a growth rate `lambda` ([`lp`]),
//! searches for the largest feasible `lambda` with certified outcomes
//! ([`solver`], [`certificate`]) and checks the resulting counting bounds
//! against the 3x+1 map itself ([`verifier`]).

pub mod certificate;
pub mod collatz;
pub mod decimal;
pub mod error;
pub mod eliminate;
pub mod interval;
pub mod lp;
pub mod shift;
pub mod solver;
pub mod tree;
pub mod verifier;

pub use error::{Error, Result};
pub use shift::ExponentShift;
