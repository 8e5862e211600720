//! Simulation, approximate Bayesian fitting and model assessment for repulsive
//! spatial point processes on rectangular windows.
//!
//! Supported models are the homogeneous Poisson process, the Strauss process with
//! an optional hard core, and determinantal point processes with Gaussian or
//! power-exponential kernels.
//!
//! - [`simulate`]: exact DPP sampling via a truncated spectral expansion and a
//!   birth-death-shift Metropolis-Hastings sampler for Strauss.
//! - [`pseudolik`]: Strauss pseudo-likelihood and profiling of the interaction radius.
//! - [`abc`]: semi-automatic ABC with a regression-built distance, pilot runs,
//!   ABC-MCMC and rejection.
//! - [`assess`]: prior-predictive Monte Carlo tests and ranked probability scores.
//! - [`io`] and [`cli`]: text formats and the `rpp` batch front end.
//!
//! All randomness flows from explicit seeds; see [`rng`].

pub mod abc;
pub mod assess;
pub mod cli;
pub mod error;
pub mod io;
pub mod model;
pub mod pattern;
pub mod pseudolik;
pub mod rng;
pub mod simulate;

pub use error::{Error, Result};
