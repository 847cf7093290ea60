//! Standard errors from the observed Fisher information.

use super::eval::{Evaluator, LogData};
use super::{FitError, FitResult, FitStatus};
use nalgebra::DMatrix;

/// Two-sided 5% critical value for the t-ratio significance flag.
pub const T_CRITICAL: f64 = 1.96;

/// Finite-difference step for coordinate value `theta`.
fn step(theta: f64) -> f64 {
    (1e-4 * theta.abs()).max(1e-5)
}

/// Attach standard errors and t-ratios to a converged fit.
///
/// The observed information is minus the central-difference Hessian of the
/// log-likelihood in the untransformed parameters. When it is not positive
/// definite the standard errors stay missing and the status becomes
/// `HessianSingular`.
pub fn standard_errors(result: &FitResult, data: &[f64]) -> Result<FitResult, FitError> {
    if !result.converged {
        return Err(FitError::NotConverged);
    }
    let logs = LogData::new(data)?;
    let family = result.family();
    let theta = result.spec.params();
    let k = theta.len();
    let ll = |p: &[f64]| -> f64 {
        match Evaluator::from_raw(family, p) {
            Some(e) => logs.log_likelihood(&e),
            None => f64::NAN,
        }
    };

    let h: Vec<f64> = theta.iter().map(|&t| step(t)).collect();
    let f0 = ll(&theta);
    let mut hess = DMatrix::<f64>::zeros(k, k);
    let mut p = theta.clone();
    for i in 0..k {
        p[i] = theta[i] + h[i];
        let fp = ll(&p);
        p[i] = theta[i] - h[i];
        let fm = ll(&p);
        p[i] = theta[i];
        hess[(i, i)] = (fp - 2.0 * f0 + fm) / (h[i] * h[i]);
        for j in 0..i {
            let mut corner = |si: f64, sj: f64| {
                p[i] = theta[i] + si * h[i];
                p[j] = theta[j] + sj * h[j];
                let v = ll(&p);
                p[i] = theta[i];
                p[j] = theta[j];
                v
            };
            let v = (corner(1.0, 1.0) - corner(1.0, -1.0) - corner(-1.0, 1.0) + corner(-1.0, -1.0))
                / (4.0 * h[i] * h[j]);
            hess[(i, j)] = v;
            hess[(j, i)] = v;
        }
    }

    let mut out = result.clone();
    out.std_errors = vec![None; k];
    out.t_ratios = vec![None; k];
    let info = -hess;
    if info.iter().any(|v| !v.is_finite()) {
        out.status = FitStatus::HessianSingular;
        return Ok(out);
    }
    let Some(chol) = info.cholesky() else {
        out.status = FitStatus::HessianSingular;
        return Ok(out);
    };
    let cov = chol.inverse();
    for i in 0..k {
        let var = cov[(i, i)];
        if var > 0.0 && var.is_finite() {
            let se = var.sqrt();
            out.std_errors[i] = Some(se);
            out.t_ratios[i] = Some(theta[i] / se);
        }
    }
    if out.status == FitStatus::HessianSingular {
        out.status = FitStatus::Converged;
    }
    Ok(out)
}
