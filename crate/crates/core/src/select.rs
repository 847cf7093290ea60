//! AIC/BIC model ranking.

use crate::dist::Family;
use crate::mle::FitResult;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum SelectError {
    #[error("no estimable family to rank")]
    NothingEstimable,
    #[error("sample size must be at least 1")]
    EmptySample,
}

pub fn aic(k: usize, log_likelihood: f64) -> f64 {
    2.0 * k as f64 - 2.0 * log_likelihood
}

pub fn bic(k: usize, n: usize, log_likelihood: f64) -> f64 {
    k as f64 * (n as f64).ln() - 2.0 * log_likelihood
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelScore {
    pub family: Family,
    pub k: usize,
    pub log_likelihood: f64,
    pub aic: f64,
    pub bic: f64,
    pub estimable: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelComparison {
    pub n: usize,
    /// In canonical family order.
    pub scores: Vec<ModelScore>,
    pub best_aic: Family,
    pub best_bic: Family,
}

impl ModelComparison {
    pub fn score(&self, family: Family) -> Option<&ModelScore> {
        self.scores.iter().find(|s| s.family == family)
    }
}

/// Pick the AIC and BIC minimisers over the estimable fits. Ties go to the
/// family with fewer parameters, then to the earlier family in canonical order.
pub fn rank_models(fits: &[FitResult], n: usize) -> Result<ModelComparison, SelectError> {
    if n == 0 {
        return Err(SelectError::EmptySample);
    }
    let mut scores: Vec<ModelScore> = fits
        .iter()
        .map(|f| {
            let family = f.family();
            let k = family.param_count();
            ModelScore {
                family,
                k,
                log_likelihood: f.log_likelihood,
                aic: aic(k, f.log_likelihood),
                bic: bic(k, n, f.log_likelihood),
                estimable: f.is_estimable(),
            }
        })
        .collect();
    scores.sort_by_key(|s| s.family.ordinal());
    let best = |key: fn(&ModelScore) -> f64| {
        scores
            .iter()
            .filter(|s| s.estimable)
            .min_by(|a, b| {
                key(a).total_cmp(&key(b)).then(a.k.cmp(&b.k)).then(a.family.ordinal().cmp(&b.family.ordinal()))
            })
            .map(|s| s.family)
    };
    let best_aic = best(|s| s.aic).ok_or(SelectError::NothingEstimable)?;
    let best_bic = best(|s| s.bic).ok_or(SelectError::NothingEstimable)?;
    Ok(ModelComparison { n, scores, best_aic, best_bic })
}

/// How often each family was chosen, per criterion, over many datasets.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SelectionTally {
    pub datasets: usize,
    /// Indexed by `Family::ordinal`.
    pub aic: [usize; 7],
    pub bic: [usize; 7],
}

impl SelectionTally {
    pub fn from_comparisons<'a>(comparisons: impl IntoIterator<Item = &'a ModelComparison>) -> Self {
        let mut t = SelectionTally::default();
        for c in comparisons {
            t.datasets += 1;
            t.aic[c.best_aic.ordinal()] += 1;
            t.bic[c.best_bic.ordinal()] += 1;
        }
        t
    }

    pub fn percent(count: usize, total: usize) -> f64 {
        if total == 0 {
            0.0
        } else {
            100.0 * count as f64 / total as f64
        }
    }
}
