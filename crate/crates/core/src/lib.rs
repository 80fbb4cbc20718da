//! Schwartz operators at finite truncation.
//!
//! Operators live on the number basis of an N-mode Fock space cut at level
//! `n_max` per mode. Phase-space functions are sampled on uniform grids with
//! the measure dx = dq dp/(2π)^N.

pub mod basis;
pub mod correspondence;
pub mod distributions;
pub mod error;
pub mod fluctuations;
pub mod io;
pub mod moments;
pub mod operator;
mod par;
pub mod phase_space;
pub mod poly;
pub mod states;
#[cfg(test)]
pub(crate) mod testutil;

pub use basis::{BasisConfig, MultiIndex, QuadratureRule};
pub use error::{Error, Result};
pub use num_complex::Complex64;
pub use operator::{CMatrix, TruncatedOperator};
pub use phase_space::{GridFunction, PhasePoint, PhaseSpaceGrid};
pub use poly::{Letter, OperatorPolynomial, Word};
