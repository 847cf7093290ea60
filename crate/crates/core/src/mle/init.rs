//! Default starting values.

use super::eval::LogData;
use crate::dist::{DistributionSpec, Family, Kernel};
use std::f64::consts::PI;

/// Scale of a logistic with the given standard deviation.
fn logistic_scale(sd: f64) -> f64 {
    sd * 3f64.sqrt() / PI
}

/// Method-of-moments start on the logs (LN, LL, dPLN); k-means seeds for mixtures.
pub(crate) fn default_start(family: Family, data: &LogData) -> DistributionSpec {
    let (mean, sd) = data.log_moments();
    let sd = if sd > 0.0 { sd } else { 1.0 };
    match family {
        Family::Ln => DistributionSpec::ln(mean, sd).expect("positive sd"),
        Family::Ll => DistributionSpec::ll(mean, logistic_scale(sd)).expect("positive sd"),
        Family::Dpln => {
            // Var(ln X) = sigma^2 + 1/alpha^2 + 1/beta^2 and E ln X = mu at alpha = beta
            let (a, b) = (2.0, 2.0);
            let var = sd * sd - 1.0 / (a * a) - 1.0 / (b * b);
            let sigma = if var > 0.0 { var.sqrt() } else { sd / 2f64.sqrt() };
            DistributionSpec::dpln(a, b, mean, sigma).expect("positive start")
        }
        _ => {
            let kernel = family.kernel().expect("mixture family");
            kmeans_start(kernel, family.components(), data.logs(), sd)
        }
    }
}

/// Quantile-split 1-D k-means on the logs, converted to mixture parameters.
pub(crate) fn kmeans_start(kernel: Kernel, k: usize, logs: &[f64], overall_sd: f64) -> DistributionSpec {
    let mut sorted = logs.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let mut centres: Vec<f64> = (0..k)
        .map(|j| {
            let lo = j * n / k;
            let hi = ((j + 1) * n / k).max(lo + 1).min(n);
            sorted[lo..hi].iter().sum::<f64>() / (hi - lo) as f64
        })
        .collect();

    // On sorted data each cluster is a contiguous run; boundaries sit at centre midpoints.
    let mut bounds = vec![0usize; k + 1];
    for _ in 0..100 {
        bounds[0] = 0;
        bounds[k] = n;
        for j in 1..k {
            let cut = 0.5 * (centres[j - 1] + centres[j]);
            bounds[j] = sorted.partition_point(|&y| y < cut).max(bounds[j - 1]);
        }
        let mut moved = false;
        for j in 0..k {
            let run = &sorted[bounds[j]..bounds[j + 1]];
            if run.is_empty() {
                continue;
            }
            let c = run.iter().sum::<f64>() / run.len() as f64;
            if (c - centres[j]).abs() > 1e-12 {
                moved = true;
            }
            centres[j] = c;
        }
        if !moved {
            break;
        }
    }

    let floor = (overall_sd / (4.0 * k as f64)).max(1e-3);
    let mut comps = Vec::with_capacity(k);
    let mut weights = Vec::with_capacity(k);
    for j in 0..k {
        let run = &sorted[bounds[j]..bounds[j + 1]];
        let (mu, sd) = if run.is_empty() {
            (centres[j], overall_sd)
        } else {
            let m = run.iter().sum::<f64>() / run.len() as f64;
            let v = run.iter().map(|y| (y - m) * (y - m)).sum::<f64>() / run.len() as f64;
            (m, v.sqrt())
        };
        let sd = sd.max(floor);
        let sigma = match kernel {
            Kernel::LogNormal => sd,
            Kernel::LogLogistic => logistic_scale(sd),
        };
        comps.push((mu, sigma));
        weights.push((run.len() as f64 / n as f64).max(0.01));
    }
    let total: f64 = weights.iter().sum();
    let weights: Vec<f64> = weights.iter().map(|w| w / total).collect();
    DistributionSpec::mixture(kernel, &comps, &weights[..k - 1]).expect("valid seed")
}

/// Embed a fit of the nested family by splitting its heaviest component in two.
pub(crate) fn embed_nested(nested: &DistributionSpec, target: Family) -> Option<DistributionSpec> {
    let kernel = target.kernel()?;
    let p = nested.params();
    let (mut comps, mut weights): (Vec<(f64, f64)>, Vec<f64>) = match nested {
        DistributionSpec::Ln(_) | DistributionSpec::Ll(_) => (vec![(p[0], p[1])], vec![1.0]),
        DistributionSpec::Mixture(m) => (
            m.components().iter().map(|c| (c.mu, c.sigma)).collect(),
            m.weights(),
        ),
        DistributionSpec::Dpln(_) => return None,
    };
    if comps.len() + 1 != target.components() || nested.family().kernel() != Some(kernel) {
        return None;
    }
    let heaviest = (0..weights.len())
        .max_by(|&a, &b| weights[a].total_cmp(&weights[b]))
        .unwrap_or(0);
    let half = weights[heaviest] / 2.0;
    weights[heaviest] = half;
    comps.insert(heaviest + 1, comps[heaviest]);
    weights.insert(heaviest + 1, half);
    DistributionSpec::mixture(kernel, &comps, &weights[..weights.len() - 1]).ok()
}
