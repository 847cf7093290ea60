use super::*;
use crate::dist::Kernel;

fn lognormal_sample(mu: f64, sigma: f64, n: usize, seed: u64) -> Vec<f64> {
    DistributionSpec::ln(mu, sigma).unwrap().sample(n, seed).unwrap()
}

fn three_ln() -> DistributionSpec {
    DistributionSpec::mixture(Kernel::LogNormal, &[(0.0, 0.3), (2.0, 0.3), (4.0, 0.3)], &[0.3, 0.4])
        .unwrap()
}

#[test]
fn exact_lognormal_on_two_points() {
    let r = fit_ln_exact(&[1.0, 1f64.exp().powi(2)]).unwrap();
    let p = r.spec.params();
    assert!((p[0] - 1.0).abs() < 1e-15 && (p[1] - 1.0).abs() < 1e-15);
    assert_eq!(r.method, FitMethod::Exact);
    assert_eq!(r.n, 2);
}

#[test]
fn exact_lognormal_degenerate() {
    assert!(matches!(fit_ln_exact(&[5.0, 5.0, 5.0]), Err(FitError::NotEstimable { .. })));
    assert!(matches!(fit_ln_exact(&[]), Err(FitError::EmptyData)));
    assert!(matches!(fit_ln_exact(&[1.0, -2.0]), Err(FitError::NonPositive { index: 1, .. })));
}

#[test]
fn exact_lognormal_is_consistent() {
    let data = lognormal_sample(3.0, 0.7, 100_000, 17);
    let p = fit_ln_exact(&data).unwrap().spec.params();
    assert!((p[0] - 3.0).abs() < 0.01 && (p[1] - 0.7).abs() < 0.01, "{p:?}");
}

#[test]
fn simplex_lognormal_matches_exact() {
    let data = [1.0, 1f64.exp().powi(2)];
    let exact = fit_ln_exact(&data).unwrap();
    let nm = fit_mle(Family::Ln, &data, &FitConfig::default()).unwrap();
    for (a, b) in exact.spec.params().iter().zip(nm.spec.params()) {
        assert!((a - b).abs() < 1e-4, "{a} vs {b}");
    }
    assert!(nm.converged);
}

#[test]
fn two_lognormal_nests_lognormal() {
    let data = lognormal_sample(0.0, 1.0, 5000, 3);
    let ln = fit_ln_exact(&data).unwrap();
    let two = fit_mle(Family::Ln2, &data, &FitConfig::default()).unwrap();
    assert!(two.log_likelihood >= ln.log_likelihood - 1e-6);
}

#[test]
fn three_lognormal_recovery_and_em_agreement() {
    let truth = three_ln().params();
    let data = three_ln().sample(20_000, 8).unwrap();
    let nm = fit_mle(Family::Ln3, &data, &FitConfig::default()).unwrap();
    assert_eq!(nm.status, FitStatus::Converged);
    let p = nm.spec.params();
    for (a, b) in p.iter().zip(&truth) {
        assert!((a - b).abs() < 0.1, "{p:?} vs {truth:?}");
    }
    let em = fit_mixture_em(Family::Ln3, &data, &FitConfig::default()).unwrap();
    assert!(em.converged);
    for (a, b) in em.spec.params().iter().zip(&p) {
        assert!((a - b).abs() < 1e-4, "EM {:?} vs simplex {p:?}", em.spec.params());
    }
}

#[test]
fn em_from_single_component_is_exact_lognormal() {
    let data = lognormal_sample(1.0, 0.5, 400, 21);
    let init =
        DistributionSpec::mixture(Kernel::LogNormal, &[(0.0, 1.0), (50.0, 1.0)], &[1.0]).unwrap();
    let em = fit_mixture_em(Family::Ln2, &data, &FitConfig::default().with_initial(init)).unwrap();
    let exact = fit_ln_exact(&data).unwrap().spec.params();
    let p = em.spec.params();
    assert!((p[0] - exact[0]).abs() < 1e-12 && (p[1] - exact[1]).abs() < 1e-12);
    assert_eq!(p[4], 1.0);
    // the empty component makes the mixture degenerate
    assert_eq!(em.status, FitStatus::NotEstimable);
}

#[test]
fn em_log_likelihood_is_monotone() {
    for seed in 0..5 {
        let data = DistributionSpec::mixture(Kernel::LogNormal, &[(0.0, 1.0), (1.0, 0.5)], &[0.5])
            .unwrap()
            .sample(800, seed)
            .unwrap();
        for family in [Family::Ln2, Family::Ln3] {
            let (_, trace) = fit_mixture_em_traced(family, &data, &FitConfig::default()).unwrap();
            assert!(trace.len() > 2);
            for w in trace.windows(2) {
                assert!(w[1] >= w[0] - 1e-9 * w[0].abs(), "EM decreased: {} -> {}", w[0], w[1]);
            }
        }
    }
}

#[test]
fn em_rejects_loglogistic() {
    let data = lognormal_sample(0.0, 1.0, 200, 1);
    assert!(matches!(
        fit_mixture_em(Family::Ll2, &data, &FitConfig::default()),
        Err(FitError::UnsupportedFamily(Family::Ll2))
    ));
}

#[test]
fn mixtures_need_ten_observations_per_parameter() {
    let data = lognormal_sample(0.0, 1.0, 79, 1);
    assert!(matches!(
        fit_mle(Family::Ln3, &data, &FitConfig::default()),
        Err(FitError::InsufficientData { required: 80, .. })
    ));
    assert!(fit_mle(Family::Ln2, &data, &FitConfig::default()).is_ok());
}

#[test]
fn lognormal_standard_errors_match_asymptotics() {
    let n = 10_000;
    let data = lognormal_sample(2.0, 0.8, n, 5);
    let fit = fit_ln_exact(&data).unwrap();
    let r = standard_errors(&fit, &data).unwrap();
    let sigma = fit.spec.params()[1];
    let se_mu = r.std_errors[0].unwrap();
    let se_sigma = r.std_errors[1].unwrap();
    let want_mu = sigma / (n as f64).sqrt();
    let want_sigma = sigma / (2.0 * n as f64).sqrt();
    assert!((se_mu / want_mu - 1.0).abs() < 0.05, "{se_mu} vs {want_mu}");
    assert!((se_sigma / want_sigma - 1.0).abs() < 0.05, "{se_sigma} vs {want_sigma}");
    let t = r.t_ratios[0].unwrap();
    assert!((t - fit.spec.params()[0] / se_mu).abs() < 1e-12);
    assert!(r.all_significant());
}

#[test]
fn vanishing_weight_is_not_significant() {
    // three isolated points form the lowest component; its weight has
    // t close to sqrt(n p) = sqrt(3), below the critical value
    let mut data = DistributionSpec::mixture(Kernel::LogNormal, &[(0.0, 0.5), (4.0, 0.5)], &[0.6])
        .unwrap()
        .sample(1497, 4)
        .unwrap();
    data.extend([-5.2f64, -5.0, -4.8].iter().map(|y| y.exp()));
    let fit = fit_mle(Family::Ln3, &data, &FitConfig::default()).unwrap();
    let r = standard_errors(&fit, &data).unwrap();
    let p = r.spec.params();
    assert!((p[0] + 5.0).abs() < 0.1 && (p[6] - 0.002).abs() < 1e-6, "{p:?}");
    let t = r.t_ratios[6].unwrap();
    assert!((t - 3f64.sqrt()).abs() < 0.15, "t = {t}");
    assert_eq!(r.significant()[6], Some(false));
    assert!(!r.all_significant());
}

#[test]
fn standard_errors_require_convergence() {
    let data = lognormal_sample(0.0, 1.0, 100, 2);
    let mut fit = fit_ln_exact(&data).unwrap();
    fit.converged = false;
    assert!(matches!(standard_errors(&fit, &data), Err(FitError::NotConverged)));
}

#[test]
fn score_vanishes_at_the_estimates() {
    let ll_data = DistributionSpec::ll(1.0, 0.4).unwrap().sample(3000, 6).unwrap();
    let ln_data = lognormal_sample(1.0, 0.4, 3000, 6);
    for (family, data) in [(Family::Ln, &ln_data), (Family::Ll, &ll_data)] {
        let fit = fit_mle(family, data, &FitConfig::default()).unwrap();
        let logs = LogData::new(data).unwrap();
        let theta = fit.spec.params();
        let ll = |p: &[f64]| logs.log_likelihood_of(&DistributionSpec::from_params(family, p).unwrap());
        let r = standard_errors(&fit, data).unwrap();
        for i in 0..theta.len() {
            let h = 1e-6;
            let mut a = theta.clone();
            let mut b = theta.clone();
            a[i] += h;
            b[i] -= h;
            let grad = (ll(&a) - ll(&b)) / (2.0 * h);
            // information scale along this coordinate is 1 / se^2
            let scale = 1.0 / r.std_errors[i].unwrap();
            assert!(grad.abs() / scale < 1e-3, "{family} d/dtheta_{i} = {grad}");
        }
    }
}

#[test]
fn nesting_holds_for_both_chains() {
    for seed in 0..3 {
        let ln_data = DistributionSpec::dpln(2.5, 1.5, 6.0, 0.8).unwrap().sample(1500, seed).unwrap();
        for chain in [[Family::Ln, Family::Ln2, Family::Ln3], [Family::Ll, Family::Ll2, Family::Ll3]] {
            let fits = fit_families(&chain, &ln_data, &FitConfig::default()).unwrap();
            let lls: Vec<f64> = fits.iter().map(|(_, r)| r.as_ref().unwrap().log_likelihood).collect();
            assert!(lls[1] >= lls[0] - 1e-6 && lls[2] >= lls[1] - 1e-6, "{chain:?}: {lls:?}");
            // standalone fits agree with the chained ones on the ordering
            let standalone = fit_mle(chain[2], &ln_data, &FitConfig::default()).unwrap();
            assert!(standalone.log_likelihood >= lls[1] - 1e-6);
        }
    }
}

#[test]
fn restarts_never_lower_the_likelihood() {
    let data = DistributionSpec::dpln(1.8, 2.0, 4.0, 0.6).unwrap().sample(2000, 12).unwrap();
    for family in [Family::Dpln, Family::Ll2, Family::Ln3] {
        let config = FitConfig { max_iterations_per_run: Some(150), ..Default::default() };
        let fit = fit_mle(family, &data, &config).unwrap();
        assert!(fit.run_log_likelihoods.len() >= 2, "{family}");
        for w in fit.run_log_likelihoods.windows(2) {
            assert!(w[1] >= w[0], "{family}: {:?}", fit.run_log_likelihoods);
        }
    }
}

#[test]
fn rescaling_shifts_locations_only() {
    let base = DistributionSpec::dpln(2.0, 1.5, 3.0, 0.7).unwrap().sample(1200, 9).unwrap();
    let c: f64 = 250.0;
    let scaled: Vec<f64> = base.iter().map(|x| x * c).collect();
    for family in [Family::Ll, Family::Dpln, Family::Ln2] {
        let a = fit_mle(family, &base, &FitConfig::default()).unwrap();
        let b = fit_mle(family, &scaled, &FitConfig::default()).unwrap();
        let names = family.param_names();
        for ((name, x), y) in names.iter().zip(a.spec.params()).zip(b.spec.params()) {
            let want = if name.starts_with("mu") { x + c.ln() } else { x };
            assert!((y - want).abs() < 2e-3 * want.abs().max(1.0), "{family} {name}: {y} vs {want}");
        }
    }
}

#[test]
fn collapsing_component_is_not_estimable() {
    let mut data = lognormal_sample(3.0, 1.0, 150, 2);
    data.extend(std::iter::repeat_n(7.0, 60));
    let fit = fit_mle(Family::Ln2, &data, &FitConfig::default()).unwrap();
    assert_eq!(fit.status, FitStatus::NotEstimable, "{:?}", fit.spec);
    assert!(!fit.is_estimable());
}

#[test]
fn initial_values_must_match_family() {
    let data = lognormal_sample(0.0, 1.0, 100, 2);
    let cfg = FitConfig::default().with_initial(DistributionSpec::ll(0.0, 1.0).unwrap());
    assert!(matches!(fit_mle(Family::Ln, &data, &cfg), Err(FitError::InitialFamily { .. })));
}
