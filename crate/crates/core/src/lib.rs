//! Monte Carlo sampling from the probability space of quantum measurements.
//!
//! A measurement (POM) maps density operators to outcome probabilities by the
//! Born rule. Not every point of the probability simplex is the image of a
//! valid state, so every sampler here is paired with a physicality check.
//!
//! * [`quantum`]: states, POMs, Born rule, purity, PPT test, random states.
//! * [`densities`]: prior, likelihood and posterior log-densities.
//! * [`physicality`]: gradient ascent over `A†A/tr(A†A)`, fast checks, ML.
//! * [`samplers`]: simplex, rejection, importance and Metropolis-Hastings.
//! * [`analysis`]: region sizes, credibilities, purity and separability.
//! * [`cli`]: the `qss` command-line front end.

pub mod analysis;
pub mod cli;
pub mod densities;
mod error;
pub mod io;
pub mod linalg;
pub mod physicality;
pub mod quadrature;
pub mod quantum;
pub mod samplers;

pub use error::{Error, Result};
