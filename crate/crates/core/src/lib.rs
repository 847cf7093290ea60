//! Fitting, testing and ranking parametric city-size distributions.
//!
//! The crate covers seven families (lognormal, loglogistic, double Pareto
//! lognormal, and two- and three-component lognormal/loglogistic mixtures),
//! maximum-likelihood estimation with simplex search and EM, observed
//! information standard errors, Monte-Carlo calibrated KS/CM/AD tests,
//! AIC/BIC ranking, and a quartile-balanced subset sampler.

pub mod country;
pub mod dist;
pub mod gof;
pub mod mle;
pub mod optim;
pub mod rng;
pub mod select;

#[cfg(test)]
pub(crate) mod testutil;

pub use dist::{DistError, DistributionSpec, Family, Kernel};
pub use mle::{FitConfig, FitError, FitResult, FitStatus};
pub use gof::{GofConfig, GofReport, Verdict};
pub use select::ModelComparison;
