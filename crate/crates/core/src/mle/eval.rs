//! Log-likelihood evaluation on log-transformed data.

use crate::dist::special::LN_SQRT_2PI;
use crate::dist::{DistributionSpec, DplnParams, Family, Kernel};
use rayon::prelude::*;

use super::FitError;

const CHUNK: usize = 16_384;
const PARALLEL_FROM: usize = 4 * CHUNK;

/// Sample stored as `ln x`, with `Σ ln x` cached for the Jacobian term.
#[derive(Debug, Clone)]
pub struct LogData {
    logs: Vec<f64>,
    sum: f64,
}

impl LogData {
    pub fn new(data: &[f64]) -> Result<Self, FitError> {
        if data.is_empty() {
            return Err(FitError::EmptyData);
        }
        if let Some((index, &value)) =
            data.iter().enumerate().find(|(_, &x)| !(x > 0.0 && x.is_finite()))
        {
            return Err(FitError::NonPositive { index, value });
        }
        let logs: Vec<f64> = data.iter().map(|x| x.ln()).collect();
        let sum = chunked_sum(&logs, |y| y);
        Ok(Self { logs, sum })
    }

    pub fn len(&self) -> usize {
        self.logs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.logs.is_empty()
    }

    pub fn logs(&self) -> &[f64] {
        &self.logs
    }

    /// `Σ ln f(x_i)` for the given evaluator.
    pub(crate) fn log_likelihood(&self, eval: &Evaluator) -> f64 {
        chunked_sum(&self.logs, |y| eval.ln_pdf_log(y)) - self.sum
    }

    pub fn log_likelihood_of(&self, spec: &DistributionSpec) -> f64 {
        self.log_likelihood(&Evaluator::from_spec(spec))
    }

    /// Mean and ML (divide-by-n) standard deviation of the logs.
    pub fn log_moments(&self) -> (f64, f64) {
        let n = self.logs.len() as f64;
        let mean = self.sum / n;
        let var = chunked_sum(&self.logs, |y| (y - mean) * (y - mean)) / n;
        (mean, var.sqrt())
    }
}

/// Sum of `f` over fixed-size chunks, combined in order. The grouping
/// depends only on the length, so parallel and serial runs agree bitwise.
fn chunked_sum<F>(values: &[f64], f: F) -> f64
where
    F: Fn(f64) -> f64 + Sync,
{
    let partial = |chunk: &[f64]| chunk.iter().map(|&y| f(y)).sum::<f64>();
    if values.len() >= PARALLEL_FROM {
        let parts: Vec<f64> = values.par_chunks(CHUNK).map(partial).collect();
        parts.iter().sum()
    } else {
        values.chunks(CHUNK).map(partial).sum()
    }
}

/// Density of `ln X` with per-component constants hoisted out of the loop.
#[derive(Debug, Clone)]
pub(crate) enum Evaluator {
    Kernels {
        kernel: Kernel,
        k: usize,
        mu: [f64; 3],
        inv_sigma: [f64; 3],
        /// `-ln sigma_i` plus the kernel's normalising constant
        offset: [f64; 3],
        weight: [f64; 3],
        ln_weight: [f64; 3],
        /// `weight_i * exp(offset_i)`
        scale: [f64; 3],
        signed: bool,
    },
    Dpln(DplnParams),
}

impl Evaluator {
    pub(crate) fn from_spec(spec: &DistributionSpec) -> Self {
        let p = spec.params();
        Self::from_raw(spec.family(), &p).expect("valid spec has valid raw parameters")
    }

    /// Build from an unchecked parameter vector (canonical order). Mixture
    /// weights may leave [0, 1]; the density is then evaluated as a signed
    /// sum and is NaN wherever it is not positive.
    pub(crate) fn from_raw(family: Family, p: &[f64]) -> Option<Self> {
        if p.len() != family.param_count() || p.iter().any(|v| !v.is_finite()) {
            return None;
        }
        let kernel = match family.kernel() {
            Some(k) => k,
            None => return DplnParams::new(p[0], p[1], p[2], p[3]).ok().map(Self::Dpln),
        };
        let k = family.components();
        let mut mu = [0.0; 3];
        let mut inv_sigma = [0.0; 3];
        let mut offset = [0.0; 3];
        let mut weight = [0.0; 3];
        let constant = match kernel {
            Kernel::LogNormal => -LN_SQRT_2PI,
            Kernel::LogLogistic => 0.0,
        };
        for i in 0..k {
            let (m, s) = (p[2 * i], p[2 * i + 1]);
            if s <= 0.0 {
                return None;
            }
            mu[i] = m;
            inv_sigma[i] = 1.0 / s;
            offset[i] = constant - s.ln();
        }
        if k == 1 {
            weight[0] = 1.0;
        } else {
            let free = &p[2 * k..];
            weight[..k - 1].copy_from_slice(free);
            weight[k - 1] = 1.0 - free.iter().sum::<f64>();
        }
        let signed = weight[..k].iter().any(|&w| w < 0.0);
        let mut ln_weight = [f64::NEG_INFINITY; 3];
        for i in 0..k {
            ln_weight[i] = weight[i].ln();
        }
        let mut scale = [0.0; 3];
        for i in 0..k {
            scale[i] = weight[i] * offset[i].exp();
        }
        Some(Self::Kernels { kernel, k, mu, inv_sigma, offset, weight, ln_weight, scale, signed })
    }

    #[inline]
    pub(crate) fn ln_pdf_log(&self, y: f64) -> f64 {
        match self {
            Self::Dpln(d) => DistributionSpec::Dpln(*d).ln_pdf_log(y),
            Self::Kernels { kernel, k, mu, inv_sigma, offset, weight, ln_weight, scale, signed } => {
                if *k > 1 {
                    // direct sum in density space unless it is close to underflow
                    let mut direct = 0.0;
                    for i in 0..*k {
                        let z = (y - mu[i]) * inv_sigma[i];
                        direct += scale[i]
                            * match kernel {
                                Kernel::LogNormal => (-0.5 * z * z).exp(),
                                Kernel::LogLogistic => {
                                    let e = (-z.abs()).exp();
                                    e / ((1.0 + e) * (1.0 + e))
                                }
                            };
                    }
                    if direct > 1e-280 {
                        return direct.ln();
                    }
                }
                let mut lf = [f64::NEG_INFINITY; 3];
                for i in 0..*k {
                    let z = (y - mu[i]) * inv_sigma[i];
                    lf[i] = offset[i]
                        + match kernel {
                            Kernel::LogNormal => -0.5 * z * z,
                            Kernel::LogLogistic => {
                                let a = z.abs();
                                -a - 2.0 * (-a).exp().ln_1p()
                            }
                        };
                }
                if *k == 1 {
                    return lf[0];
                }
                if !*signed {
                    let mut m = f64::NEG_INFINITY;
                    for i in 0..*k {
                        m = m.max(lf[i] + ln_weight[i]);
                    }
                    if m == f64::NEG_INFINITY {
                        return m;
                    }
                    let mut s = 0.0;
                    for i in 0..*k {
                        s += (lf[i] + ln_weight[i] - m).exp();
                    }
                    m + s.ln()
                } else {
                    let m = lf[..*k].iter().copied().fold(f64::NEG_INFINITY, f64::max);
                    let s: f64 = (0..*k).map(|i| weight[i] * (lf[i] - m).exp()).sum();
                    if s > 0.0 {
                        m + s.ln()
                    } else {
                        f64::NAN
                    }
                }
            }
        }
    }
}
