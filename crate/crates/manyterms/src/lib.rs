//! Series estimation of the partially linear model when the number of
//! approximating terms K is allowed to be a non-vanishing fraction of the
//! sample size, together with the diagnostics that make that regime
//! observable: the exact V-statistic decomposition of the estimator's score,
//! degrees-of-freedom-corrected variance estimates, two companion estimators
//! with the same pairwise structure (JIVE2 and the integrated squared
//! density), and a reproducible Monte Carlo harness.
//!
//! The numerical core is a rank-revealing Householder QR of the basis matrix;
//! the annihilator M = I - P(P'P)^{-1}P' is never formed densely. Everything
//! downstream (fitting, leverage complements, off-diagonal bilinear forms)
//! routes through that one factorization.

pub mod basis;
pub mod companions;
mod error;
pub mod normal;
pub mod plm;
pub mod projection;
pub mod simulation;
pub mod stats;
pub mod vstat;

pub(crate) mod smallalg;

pub use error::{Error, Result};
