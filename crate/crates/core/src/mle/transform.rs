//! Maps between a family's constrained parameters and R^k.
//!
//! Positive parameters go through `ln`, mixture weights through a
//! multinomial logit with the last component as reference.

use crate::dist::{DistributionSpec, Family};

/// Weights below this are floored before taking logits.
const MIN_WEIGHT: f64 = 1e-300;
/// Search bound on the dPLN tail indices. Beyond it a tail is numerically
/// Gaussian and the likelihood is flat, which would leave the simplex drifting.
pub(crate) const MAX_TAIL_INDEX: f64 = 1e4;

pub(crate) fn to_unconstrained(spec: &DistributionSpec) -> Vec<f64> {
    let p = spec.params();
    let family = spec.family();
    match family {
        Family::Ln | Family::Ll => vec![p[0], p[1].ln()],
        Family::Dpln => {
            let cap = MAX_TAIL_INDEX.ln();
            vec![p[0].ln().min(cap), p[1].ln().min(cap), p[2], p[3].ln()]
        }
        _ => {
            let k = family.components();
            let mut out = Vec::with_capacity(p.len());
            for i in 0..k {
                out.push(p[2 * i]);
                out.push(p[2 * i + 1].ln());
            }
            let free = &p[2 * k..];
            let last = (1.0 - free.iter().sum::<f64>()).max(MIN_WEIGHT);
            for &w in free {
                out.push((w.max(MIN_WEIGHT) / last).ln());
            }
            out
        }
    }
}

/// Canonical parameter vector for an unconstrained point; `None` when the
/// point maps outside the representable region (overflow/underflow).
pub(crate) fn to_params(family: Family, u: &[f64]) -> Option<Vec<f64>> {
    let out = match family {
        Family::Ln | Family::Ll => vec![u[0], u[1].exp()],
        Family::Dpln => {
            let (alpha, beta) = (u[0].exp(), u[1].exp());
            if alpha > MAX_TAIL_INDEX || beta > MAX_TAIL_INDEX {
                return None;
            }
            vec![alpha, beta, u[2], u[3].exp()]
        }
        _ => {
            let k = family.components();
            let mut out = Vec::with_capacity(u.len());
            for i in 0..k {
                out.push(u[2 * i]);
                out.push(u[2 * i + 1].exp());
            }
            let logits = &u[2 * k..];
            // softmax over (logits, 0)
            let m = logits.iter().copied().fold(0.0, f64::max);
            let denom = (-m).exp() + logits.iter().map(|a| (a - m).exp()).sum::<f64>();
            for a in logits {
                out.push((a - m).exp() / denom);
            }
            out
        }
    };
    if out.iter().all(|v| v.is_finite()) {
        Some(out)
    } else {
        None
    }
}

pub(crate) fn from_unconstrained(family: Family, u: &[f64]) -> Option<DistributionSpec> {
    let p = to_params(family, u)?;
    DistributionSpec::from_params(family, &p).ok()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::Kernel;

    #[test]
    fn round_trip() {
        let specs = [
            DistributionSpec::ln(3.0, 0.2).unwrap(),
            DistributionSpec::dpln(1.5, 0.7, 8.0, 1.1).unwrap(),
            DistributionSpec::mixture(Kernel::LogLogistic, &[(1.0, 0.5), (3.0, 2.0), (5.0, 0.1)], &[0.2, 0.5])
                .unwrap(),
            DistributionSpec::mixture(Kernel::LogNormal, &[(1.0, 0.5), (3.0, 2.0)], &[0.9]).unwrap(),
        ];
        for s in &specs {
            let u = to_unconstrained(s);
            let back = from_unconstrained(s.family(), &u).unwrap();
            for (a, b) in s.params().iter().zip(back.params()) {
                assert!((a - b).abs() < 1e-14 * a.abs().max(1.0));
            }
        }
    }

    #[test]
    fn extreme_logits_stay_in_simplex() {
        let s = from_unconstrained(Family::Ln3, &[0.0, 0.0, 1.0, 0.0, 2.0, 0.0, 800.0, -800.0]).unwrap();
        let p = s.params();
        assert!(p[6] <= 1.0 && p[7] >= 0.0 && p[6] + p[7] <= 1.0);
        assert!(from_unconstrained(Family::Ln, &[0.0, 1000.0]).is_none());
    }
}
