//! EM for lognormal mixtures, run as Gaussian-mixture EM on `ln x`.

use super::eval::LogData;
use super::{init, is_degenerate, required_observations, FitConfig, FitError, FitMethod, FitResult, FitStatus};
use crate::dist::special::LN_SQRT_2PI;
use crate::dist::{DistributionSpec, Family, Kernel};

const MAX_ITERATIONS: usize = 100_000;
/// Convergence on the largest parameter change between iterations.
const PARAM_TOLERANCE: f64 = 1e-11;
/// Components whose responsibility mass drops below this keep their previous parameters.
const MIN_MASS: f64 = 1e-300;

/// Fit a 2LN or 3LN by EM. Same contract as `fit_mle`.
pub fn fit_mixture_em(family: Family, data: &[f64], config: &FitConfig) -> Result<FitResult, FitError> {
    fit_mixture_em_traced(family, data, config).map(|(r, _)| r)
}

/// [`fit_mixture_em`] that also returns the log-likelihood after every iteration.
pub fn fit_mixture_em_traced(
    family: Family,
    data: &[f64],
    config: &FitConfig,
) -> Result<(FitResult, Vec<f64>), FitError> {
    if !matches!(family, Family::Ln2 | Family::Ln3) {
        return Err(FitError::UnsupportedFamily(family));
    }
    let logs = LogData::new(data)?;
    let required = required_observations(family);
    if logs.len() < required {
        return Err(FitError::InsufficientData { family, n: logs.len(), required });
    }
    let start = match &config.initial_values {
        Some(s) if s.family() == family => s.clone(),
        Some(s) => return Err(FitError::InitialFamily { expected: family, got: s.family() }),
        None => {
            let (_, sd) = logs.log_moments();
            init::kmeans_start(Kernel::LogNormal, family.components(), logs.logs(), sd.max(1e-3))
        }
    };

    let k = family.components();
    let p = start.params();
    let mut mu: Vec<f64> = (0..k).map(|i| p[2 * i]).collect();
    let mut sigma: Vec<f64> = (0..k).map(|i| p[2 * i + 1]).collect();
    let mut weight = match &start {
        DistributionSpec::Mixture(m) => m.weights(),
        _ => unreachable!("mixture family"),
    };

    let y = logs.logs();
    let n = y.len() as f64;
    let shift: f64 = y.iter().sum();
    let mut trace = Vec::new();
    let mut converged = false;
    let mut collapsed = false;
    let mut resp = vec![0.0; k];

    for _ in 0..MAX_ITERATIONS {
        let mut mass = vec![0.0; k];
        let mut sum_y = vec![0.0; k];
        let mut sum_yy = vec![0.0; k];
        let mut ll = 0.0;
        let ln_w: Vec<f64> = weight.iter().map(|w| w.ln()).collect();
        let ln_s: Vec<f64> = sigma.iter().map(|s| s.ln()).collect();
        for &yi in y {
            let mut m = f64::NEG_INFINITY;
            for j in 0..k {
                let z = (yi - mu[j]) / sigma[j];
                resp[j] = ln_w[j] - ln_s[j] - LN_SQRT_2PI - 0.5 * z * z;
                m = m.max(resp[j]);
            }
            let mut s = 0.0;
            for r in resp.iter_mut() {
                *r = (*r - m).exp();
                s += *r;
            }
            ll += m + s.ln();
            for j in 0..k {
                let r = resp[j] / s;
                mass[j] += r;
                sum_y[j] += r * yi;
                sum_yy[j] += r * yi * yi;
            }
        }
        trace.push(ll - shift);

        let mut change: f64 = 0.0;
        for j in 0..k {
            let w = mass[j] / n;
            change = change.max((w - weight[j]).abs());
            weight[j] = w;
            if mass[j] < MIN_MASS {
                continue;
            }
            let m = sum_y[j] / mass[j];
            let v = (sum_yy[j] / mass[j] - m * m).max(0.0);
            let s = v.sqrt();
            change = change.max((m - mu[j]).abs()).max((s - sigma[j]).abs());
            mu[j] = m;
            sigma[j] = s;
        }
        if sigma.iter().any(|&s| !(s > super::DEGENERACY_THRESHOLD)) {
            collapsed = true;
            break;
        }
        if change < PARAM_TOLERANCE {
            converged = true;
            break;
        }
    }

    // weights renormalised against rounding before building the spec
    let total: f64 = weight.iter().sum();
    weight.iter_mut().for_each(|w| *w /= total);
    let comps: Vec<(f64, f64)> = mu
        .iter()
        .zip(&sigma)
        .map(|(&m, &s)| (m, s.max(f64::MIN_POSITIVE)))
        .collect();
    let spec = DistributionSpec::mixture(Kernel::LogNormal, &comps, &weight[..k - 1])?.canonical();
    let ll = logs.log_likelihood_of(&spec);
    let mut result = FitResult::new(spec, ll, logs.len(), FitMethod::Em);
    result.converged = converged;
    if collapsed || is_degenerate(&result.spec) || !ll.is_finite() {
        result.status = FitStatus::NotEstimable;
    }
    Ok((result, trace))
}
