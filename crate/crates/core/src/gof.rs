//! Goodness of fit: KS, Cramér–von Mises and Anderson–Darling statistics
//! with parametric-bootstrap p-values.

use crate::dist::{DistError, DistributionSpec, Family};
use crate::mle::{fit, FitConfig, FitError, FitResult, LogData};
use crate::rng::stream_seed;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Clamp applied to model CDF values inside the AD statistic.
pub const AD_EPSILON: f64 = 1e-12;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum GofError {
    #[error(transparent)]
    Dist(#[from] DistError),
    #[error(transparent)]
    Fit(#[from] FitError),
    #[error("the fit being tested did not converge")]
    NotConverged,
    #[error("fit is for {got}, test requested for {expected}")]
    FamilyMismatch { expected: Family, got: Family },
    #[error("at least one replicate is required")]
    NoReplicates,
    #[error("{failed} of {replicates} bootstrap replicates failed to fit")]
    TooManyFailures { failed: usize, replicates: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Verdict {
    NonReject,
    Mixed,
    Reject,
}

impl Verdict {
    pub fn classify(p_values: &[f64], level: f64) -> Verdict {
        let rejected = p_values.iter().filter(|&&p| p < level).count();
        if rejected == 0 {
            Verdict::NonReject
        } else if rejected == p_values.len() {
            Verdict::Reject
        } else {
            Verdict::Mixed
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Verdict::NonReject => "non-reject",
            Verdict::Mixed => "mixed",
            Verdict::Reject => "reject",
        }
    }
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestOutcome {
    pub statistic: f64,
    pub p_value: f64,
    /// Replicates that entered the p-value.
    pub replicates: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GofReport {
    pub ks: TestOutcome,
    pub cm: TestOutcome,
    pub ad: TestOutcome,
    pub verdict: Verdict,
    pub significance_level: f64,
    pub failed_replicates: usize,
    pub refit: bool,
}

impl GofReport {
    pub fn p_values(&self) -> [f64; 3] {
        [self.ks.p_value, self.cm.p_value, self.ad.p_value]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GofConfig {
    pub replicates: usize,
    pub seed: u64,
    pub refit: bool,
    pub significance_level: f64,
    /// Fraction of failed replicate fits above which the test errors out.
    pub max_failure_fraction: f64,
    /// Used for the per-replicate refits, which always start from the tested fit.
    pub fit_config: FitConfig,
}

impl Default for GofConfig {
    fn default() -> Self {
        Self {
            replicates: 350,
            seed: 0,
            refit: true,
            significance_level: 0.05,
            max_failure_fraction: 0.2,
            fit_config: FitConfig::default(),
        }
    }
}

/// Model CDF at the sorted observations.
fn sorted_cdf(data: &[f64], spec: &DistributionSpec) -> Result<Vec<(f64, f64)>, GofError> {
    let logs = LogData::new(data).map_err(|e| match e {
        FitError::EmptyData => GofError::Dist(DistError::EmptySample),
        FitError::NonPositive { value, .. } => GofError::Dist(DistError::Domain(value)),
        other => GofError::Fit(other),
    })?;
    Ok(sorted_cdf_logs(logs.logs(), spec))
}

/// (cdf, sf) pairs at the sorted log observations.
fn sorted_cdf_logs(logs: &[f64], spec: &DistributionSpec) -> Vec<(f64, f64)> {
    let mut y = logs.to_vec();
    y.sort_by(f64::total_cmp);
    y.iter().map(|&v| (spec.cdf_log(v), spec.sf_log(v))).collect()
}

fn ks_from(u: &[(f64, f64)]) -> f64 {
    let n = u.len() as f64;
    u.iter()
        .enumerate()
        .map(|(i, &(f, _))| {
            let i = i as f64;
            ((i + 1.0) / n - f).abs().max((f - i / n).abs())
        })
        .fold(0.0, f64::max)
}

fn cm_from(u: &[(f64, f64)]) -> f64 {
    let n = u.len() as f64;
    let s: f64 = u
        .iter()
        .enumerate()
        .map(|(i, &(f, _))| (f - (2.0 * i as f64 + 1.0) / (2.0 * n)).powi(2))
        .sum();
    1.0 / (12.0 * n) + s
}

fn ad_from(u: &[(f64, f64)]) -> f64 {
    let n = u.len();
    let clamp = |v: f64| v.clamp(AD_EPSILON, 1.0 - AD_EPSILON);
    let s: f64 = (0..n)
        .map(|i| {
            let lower = clamp(u[i].0).ln();
            let upper = clamp(u[n - 1 - i].1).ln();
            (2 * i + 1) as f64 * (lower + upper)
        })
        .sum();
    -(n as f64) - s / n as f64
}

pub fn ks_statistic(data: &[f64], spec: &DistributionSpec) -> Result<f64, GofError> {
    Ok(ks_from(&sorted_cdf(data, spec)?))
}

pub fn cm_statistic(data: &[f64], spec: &DistributionSpec) -> Result<f64, GofError> {
    Ok(cm_from(&sorted_cdf(data, spec)?))
}

/// Model CDF values are clamped to `[AD_EPSILON, 1 - AD_EPSILON]`.
pub fn ad_statistic(data: &[f64], spec: &DistributionSpec) -> Result<f64, GofError> {
    Ok(ad_from(&sorted_cdf(data, spec)?))
}

/// KS, CM and AD in one pass over the sorted data.
pub fn statistics(data: &[f64], spec: &DistributionSpec) -> Result<[f64; 3], GofError> {
    let u = sorted_cdf(data, spec)?;
    Ok([ks_from(&u), cm_from(&u), ad_from(&u)])
}

/// Add-one Monte-Carlo p-value.
pub fn mc_p_value(observed: f64, simulated: &[f64]) -> f64 {
    let exceed = simulated.iter().filter(|&&s| s >= observed).count();
    (1 + exceed) as f64 / (simulated.len() + 1) as f64
}

/// Parametric-bootstrap test of `fit` on `data`.
///
/// Replicate `r` draws `n` points from `fit.spec` with seed
/// `stream_seed(config.seed, r)`. With `refit`, the family is re-estimated on
/// each synthetic sample (starting from `fit.spec`) and the statistics are
/// taken against that refit; otherwise against `fit.spec` itself.
pub fn monte_carlo_test(
    data: &[f64],
    family: Family,
    fit_result: &FitResult,
    config: &GofConfig,
) -> Result<GofReport, GofError> {
    if fit_result.family() != family {
        return Err(GofError::FamilyMismatch { expected: family, got: fit_result.family() });
    }
    if !fit_result.converged {
        return Err(GofError::NotConverged);
    }
    if config.replicates == 0 {
        return Err(GofError::NoReplicates);
    }
    let observed = statistics(data, &fit_result.spec)?;
    let n = data.len();
    let spec = &fit_result.spec;
    let refit_config = config.fit_config.clone().with_initial(spec.clone());

    let replicate = |r: usize| -> Option<[f64; 3]> {
        let sample = spec.sample(n, stream_seed(config.seed, r as u64)).ok()?;
        if config.refit {
            let refit = fit(family, &sample, &refit_config).ok()?;
            statistics(&sample, &refit.spec).ok()
        } else {
            statistics(&sample, spec).ok()
        }
    };
    let results: Vec<Option<[f64; 3]>> = (0..config.replicates).into_par_iter().map(replicate).collect();

    let valid: Vec<[f64; 3]> = results.iter().flatten().copied().collect();
    let failed = config.replicates - valid.len();
    if failed as f64 > config.max_failure_fraction * config.replicates as f64 || valid.is_empty() {
        return Err(GofError::TooManyFailures { failed, replicates: config.replicates });
    }
    let outcome = |j: usize| {
        let sims: Vec<f64> = valid.iter().map(|s| s[j]).collect();
        TestOutcome { statistic: observed[j], p_value: mc_p_value(observed[j], &sims), replicates: valid.len() }
    };
    let (ks, cm, ad) = (outcome(0), outcome(1), outcome(2));
    let verdict = Verdict::classify(&[ks.p_value, cm.p_value, ad.p_value], config.significance_level);
    Ok(GofReport {
        ks,
        cm,
        ad,
        verdict,
        significance_level: config.significance_level,
        failed_replicates: failed,
        refit: config.refit,
    })
}
