//! Monte Carlo engine for long-horizon multivariate market paths.
//!
//! The process advances on a uniform grid of step `δt`:
//!
//! ```text
//! r(t+δt) = μ(t) + Σ(t)^{1/2} ε(t+δt)
//! p(t+δt) = p(t) ⊙ (1 + r(t+δt))
//! ```
//!
//! with a drift built from the capital market assumptions plus optional
//! drift-uncertainty and negative-return-correlation terms ([`drift`]), a
//! constant or affine long-memory ARCH covariance ([`covariance`]), and
//! normal or asymmetric fat-tailed innovations ([`innovation`]).
//! [`simulate`] runs seeded parallel ensembles and [`stats`] holds the
//! estimators used to validate them against historical data.

pub mod covariance;
pub mod drift;
pub mod error;
pub mod innovation;
pub mod io;
pub mod market;
pub mod simulate;
pub mod stats;
mod window;

pub use error::{Error, Result};
