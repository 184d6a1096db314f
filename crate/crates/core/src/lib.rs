//! Mixture-of-Gamma channel models for IRS-assisted downlink networks.
//!
//! Direct, cascaded and combined (direct plus cascaded) channel power gains are
//! represented as finite mixtures of Gamma densities. On top of that sit
//! Poisson-network interference Laplace transforms and a unified
//! `E[g(SINR)]` evaluator for spectral efficiency, SINR moments and outage.
//! A seeded Monte-Carlo simulator provides an independent reference.

pub mod channel;
pub mod error;
pub mod geometry;
pub mod interference;
pub mod metrics;
pub mod mixgamma;
pub mod montecarlo;
pub mod specfun;
pub mod stats;

pub use error::{Error, Result};
pub use mixgamma::{FadingSpec, MixtureGamma, MixtureKind};
pub use specfun::QuadratureRule;
