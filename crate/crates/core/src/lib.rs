//! Spectral-Galerkin discretization of the stochastic Burgers equation
//! with the tamed exponential Euler scheme, plus the Monte Carlo estimators
//! used to study it.

pub mod analysis;
pub mod noise;
pub mod rng;
pub mod scheme;
pub mod spectral;
pub mod taming;
