//! Maximum-likelihood estimation for the seven families.
//!
//! Every family can be fitted by Nelder–Mead on a transformed, unconstrained
//! parameter space ([`fit_mle`]). The lognormal also has the closed-form
//! estimator ([`fit_ln_exact`]) and lognormal mixtures have EM
//! ([`fit_mixture_em`]), which serve as cross-checks of the simplex route.
//! Standard errors come from the observed information ([`standard_errors`]).

mod em;
mod eval;
mod init;
mod se;
mod transform;

pub use em::{fit_mixture_em, fit_mixture_em_traced};
pub use eval::LogData;
pub use se::{standard_errors, T_CRITICAL};

use crate::dist::{DistError, DistributionSpec, Family};
use crate::optim::{nelder_mead, NelderMeadOptions};
use eval::Evaluator;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Estimates below this (sigma or weight) make a mixture fit degenerate.
pub const DEGENERACY_THRESHOLD: f64 = 1e-8;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum FitError {
    #[error("empty data set")]
    EmptyData,
    #[error("observation {index} is not a positive finite number ({value})")]
    NonPositive { index: usize, value: f64 },
    #[error("{family} needs at least {required} observations, got {n}")]
    InsufficientData { family: Family, n: usize, required: usize },
    #[error("{family} cannot be estimated: {reason}")]
    NotEstimable { family: Family, reason: String },
    #[error("{0} is not supported by this estimator")]
    UnsupportedFamily(Family),
    #[error("initial values are for {got}, expected {expected}")]
    InitialFamily { expected: Family, got: Family },
    #[error("fit did not converge")]
    NotConverged,
    #[error(transparent)]
    Dist(#[from] DistError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FitStatus {
    Converged,
    NotEstimable,
    HessianSingular,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FitMethod {
    Exact,
    Simplex,
    Em,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    /// Restart loop stops once a run improves the log-likelihood by less than this.
    pub tolerance: f64,
    /// Vertex spread (transformed space and objective) ending one simplex run.
    pub simplex_tolerance: f64,
    /// Iteration budget of one simplex run; `None` means 200 per parameter.
    pub max_iterations_per_run: Option<usize>,
    pub max_restarts: usize,
    pub initial_values: Option<DistributionSpec>,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            tolerance: 1e-4,
            simplex_tolerance: 1e-9,
            max_iterations_per_run: None,
            max_restarts: 20,
            initial_values: None,
        }
    }
}

impl FitConfig {
    pub fn with_initial(mut self, spec: DistributionSpec) -> Self {
        self.initial_values = Some(spec);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub spec: DistributionSpec,
    pub std_errors: Vec<Option<f64>>,
    pub t_ratios: Vec<Option<f64>>,
    pub log_likelihood: f64,
    pub n: usize,
    pub converged: bool,
    pub restarts_used: usize,
    pub status: FitStatus,
    pub method: FitMethod,
    /// Log-likelihood at the end of each simplex run; empty for exact and EM fits.
    pub run_log_likelihoods: Vec<f64>,
}

impl FitResult {
    fn new(spec: DistributionSpec, log_likelihood: f64, n: usize, method: FitMethod) -> Self {
        let k = spec.family().param_count();
        Self {
            spec,
            std_errors: vec![None; k],
            t_ratios: vec![None; k],
            log_likelihood,
            n,
            converged: true,
            restarts_used: 0,
            status: FitStatus::Converged,
            method,
            run_log_likelihoods: Vec::new(),
        }
    }

    pub fn family(&self) -> Family {
        self.spec.family()
    }

    pub fn is_estimable(&self) -> bool {
        self.status != FitStatus::NotEstimable && self.log_likelihood.is_finite()
    }

    /// `Some(|t| >= T_CRITICAL)` for each parameter with a standard error.
    pub fn significant(&self) -> Vec<Option<bool>> {
        self.t_ratios.iter().map(|t| t.map(|t| t.abs() >= T_CRITICAL)).collect()
    }

    /// All parameters have standard errors and are significant.
    pub fn all_significant(&self) -> bool {
        self.significant().iter().all(|s| *s == Some(true))
    }
}

/// Closed-form lognormal estimator: mean and ML standard deviation of `ln x`.
pub fn fit_ln_exact(data: &[f64]) -> Result<FitResult, FitError> {
    let logs = LogData::new(data)?;
    fit_ln_exact_logs(&logs)
}

fn fit_ln_exact_logs(logs: &LogData) -> Result<FitResult, FitError> {
    let (mu, sigma) = logs.log_moments();
    if !(sigma > 0.0) {
        return Err(FitError::NotEstimable {
            family: Family::Ln,
            reason: "all observations are identical".into(),
        });
    }
    let spec = DistributionSpec::ln(mu, sigma)?;
    let ll = logs.log_likelihood_of(&spec);
    Ok(FitResult::new(spec, ll, logs.len(), FitMethod::Exact))
}

/// Minimum sample size for a family: mixtures need ten observations per parameter.
pub fn required_observations(family: Family) -> usize {
    if family.is_mixture() {
        10 * family.param_count()
    } else {
        1
    }
}

/// Maximise the likelihood by restarted Nelder–Mead on the transformed space.
///
/// Without `config.initial_values`, mixtures are started both from k-means
/// seeds and from the fit of the nested family with one component split, so
/// the result never falls below the nested maximum.
pub fn fit_mle(family: Family, data: &[f64], config: &FitConfig) -> Result<FitResult, FitError> {
    let logs = LogData::new(data)?;
    fit_mle_logs(family, &logs, config, None)
}

/// [`fit_mle`] with the nested family's fit supplied by the caller.
pub fn fit_mle_with_nested(
    family: Family,
    data: &[f64],
    config: &FitConfig,
    nested: Option<&FitResult>,
) -> Result<FitResult, FitError> {
    let logs = LogData::new(data)?;
    fit_mle_logs(family, &logs, config, nested)
}

pub(crate) fn fit_mle_logs(
    family: Family,
    logs: &LogData,
    config: &FitConfig,
    nested: Option<&FitResult>,
) -> Result<FitResult, FitError> {
    let required = required_observations(family);
    if logs.len() < required {
        return Err(FitError::InsufficientData { family, n: logs.len(), required });
    }
    let starts = match &config.initial_values {
        Some(init) => {
            if init.family() != family {
                return Err(FitError::InitialFamily { expected: family, got: init.family() });
            }
            vec![init.clone()]
        }
        None => {
            let mut starts = vec![init::default_start(family, logs)];
            if let Some(nested_family) = family.nested() {
                let owned;
                let nested_fit = match nested {
                    Some(f) if f.family() == nested_family => Some(f),
                    _ => {
                        owned = fit_logs(nested_family, logs, config).ok();
                        owned.as_ref()
                    }
                };
                if let Some(f) = nested_fit.filter(|f| f.log_likelihood.is_finite()) {
                    starts.extend(init::embed_nested(&f.spec, family));
                }
            }
            starts
        }
    };

    // a collapsed component makes the likelihood unbounded, so a regular
    // local maximum is preferred to any degenerate one
    let mut best: Option<FitResult> = None;
    for start in &starts {
        let candidate = simplex_with_restarts(family, logs, config, start);
        let better = match &best {
            None => true,
            Some(b) => match (is_degenerate(&b.spec), is_degenerate(&candidate.spec)) {
                (true, false) => true,
                (false, true) => false,
                _ => candidate.log_likelihood > b.log_likelihood,
            },
        };
        if better {
            best = Some(candidate);
        }
    }
    let mut result = best.expect("at least one start");
    if !result.log_likelihood.is_finite() {
        return Err(FitError::NotEstimable {
            family,
            reason: "log-likelihood is not finite at any start".into(),
        });
    }
    result.spec = result.spec.canonical();
    result.log_likelihood = logs.log_likelihood_of(&result.spec);
    if is_degenerate(&result.spec) {
        result.status = FitStatus::NotEstimable;
    }
    Ok(result)
}

fn simplex_with_restarts(
    family: Family,
    logs: &LogData,
    config: &FitConfig,
    start: &DistributionSpec,
) -> FitResult {
    let objective = |u: &[f64]| -> f64 {
        match transform::to_params(family, u).and_then(|p| Evaluator::from_raw(family, &p)) {
            Some(e) => -logs.log_likelihood(&e),
            None => f64::INFINITY,
        }
    };
    let opts = NelderMeadOptions {
        max_iterations: config.max_iterations_per_run.unwrap_or(200 * family.param_count()),
        x_tolerance: config.simplex_tolerance,
        f_tolerance: config.simplex_tolerance,
        ..Default::default()
    };
    let mut x = transform::to_unconstrained(start);
    let mut value = objective(&x);
    let mut history = Vec::new();
    let mut runs = 0;
    let mut converged = false;
    while runs <= config.max_restarts {
        let m = nelder_mead(objective, &x, &opts);
        runs += 1;
        let improvement = value - m.f;
        // NM keeps its best vertex, so m.f <= value
        if m.f <= value {
            x = m.x;
            value = m.f;
        }
        history.push(-value);
        if transform::from_unconstrained(family, &x).is_some_and(|s| is_degenerate(&s)) {
            break;
        }
        // a repeat run that gains nothing ends the loop even when the simplex
        // is still drifting along a flat ridge (e.g. a dPLN tail index running off)
        if improvement.abs() < config.tolerance && (m.converged || runs > 1) {
            converged = true;
            break;
        }
    }
    let spec = transform::from_unconstrained(family, &x).unwrap_or_else(|| start.clone());
    let mut result = FitResult::new(spec, -value, logs.len(), FitMethod::Simplex);
    result.converged = converged;
    result.restarts_used = runs.saturating_sub(1);
    result.run_log_likelihoods = history;
    result
}

pub(crate) fn is_degenerate(spec: &DistributionSpec) -> bool {
    match spec {
        DistributionSpec::Mixture(m) => {
            m.components().iter().any(|c| c.sigma < DEGENERACY_THRESHOLD)
                || m.weights().iter().any(|&w| w < DEGENERACY_THRESHOLD)
        }
        _ => false,
    }
}

/// Fit one family by its default route: exact for LN, simplex otherwise.
pub fn fit(family: Family, data: &[f64], config: &FitConfig) -> Result<FitResult, FitError> {
    let logs = LogData::new(data)?;
    fit_logs(family, &logs, config)
}

fn fit_logs(family: Family, logs: &LogData, config: &FitConfig) -> Result<FitResult, FitError> {
    match family {
        Family::Ln => fit_ln_exact_logs(logs),
        _ => fit_mle_logs(family, logs, config, None),
    }
}

/// Fit several families, reusing each nested fit as a start for the next
/// mixture size. Results follow the order of `families`.
pub fn fit_families(
    families: &[Family],
    data: &[f64],
    config: &FitConfig,
) -> Result<Vec<(Family, Result<FitResult, FitError>)>, FitError> {
    let logs = LogData::new(data)?;
    let chains: [&[Family]; 3] =
        [&[Family::Ln, Family::Ln2, Family::Ln3], &[Family::Ll, Family::Ll2, Family::Ll3], &[Family::Dpln]];
    let wanted = |f: &Family| families.contains(f);
    let per_chain: Vec<Vec<(Family, Result<FitResult, FitError>)>> = {
        use rayon::prelude::*;
        chains
            .par_iter()
            .map(|chain| {
                let last = chain.iter().rposition(wanted);
                let Some(last) = last else { return Vec::new() };
                let mut out = Vec::new();
                let mut prev: Option<FitResult> = None;
                for &family in &chain[..=last] {
                    let r = match family {
                        Family::Ln => fit_ln_exact_logs(&logs),
                        f if f.is_mixture() => fit_mle_logs(f, &logs, config, prev.as_ref()),
                        f => fit_mle_logs(f, &logs, config, None),
                    };
                    prev = r.as_ref().ok().cloned();
                    if wanted(&family) {
                        out.push((family, r));
                    }
                }
                out
            })
            .collect()
    };
    let mut all: Vec<(Family, Result<FitResult, FitError>)> = per_chain.into_iter().flatten().collect();
    all.sort_by_key(|(f, _)| families.iter().position(|g| g == f));
    Ok(all)
}

#[cfg(test)]
mod tests;
