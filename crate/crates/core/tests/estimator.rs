mod common;

use ergm_lasso::estimator::{Estimator, McmcMoments, SgdConfig};
use ergm_lasso::graph::AttributeTable;
use ergm_lasso::oracle::ExactModel;
use ergm_lasso::statistics::{ModelSpec, Term, TermKind};

use common::{five_node_exact, five_node_network};

fn tight() -> SgdConfig {
    SgdConfig {
        tol: 1e-7,
        max_iters: 50_000,
        ..SgdConfig::default()
    }
}

fn observed(em: &ExactModel) -> Vec<f64> {
    em.model().scaled_stats(&five_node_network()).unwrap()
}

#[test]
fn zero_penalty_reproduces_the_mle() {
    let em = five_node_exact();
    let obs = observed(&em);
    let mut est = Estimator::exact(&em, &obs, tight()).unwrap();
    let fit = est.fit(0.0, None).unwrap();
    let mle = em.mle(&obs).unwrap();
    assert!(fit.converged);
    for (a, b) in fit.theta.iter().zip(&mle) {
        assert!((a - b).abs() < 1e-3, "{:?} vs {mle:?}", fit.theta);
    }
}

#[test]
fn shrinkage_is_monotone_in_lambda() {
    let em = five_node_exact();
    let obs = observed(&em);
    let lmax = em.lambda_max(&obs).unwrap();
    let mut est = Estimator::exact(&em, &obs, tight()).unwrap();
    let mut prev = f64::INFINITY;
    for k in 0..=10 {
        let fit = est.fit(lmax * k as f64 / 10.0, None).unwrap();
        let size = fit.theta[1].abs();
        assert!(size <= prev + 1e-4, "lambda step {k}: {size} > {prev}");
        prev = size;
    }
    assert_eq!(prev, 0.0);
}

#[test]
fn penalized_solution_is_stationary() {
    let em = five_node_exact();
    let obs = observed(&em);
    let lmax = em.lambda_max(&obs).unwrap();
    let mut est = Estimator::exact(&em, &obs, tight()).unwrap();
    for frac in [0.3, 0.8, 1.2] {
        let lambda = frac * lmax;
        let fit = est.fit(lambda, None).unwrap();
        let mean = em.moments(&fit.theta).unwrap().mean;
        let g: Vec<f64> = obs.iter().zip(&mean).map(|(o, m)| o - m).collect();
        assert!(g[0].abs() < 1e-3, "edges gradient {}", g[0]);
        if fit.theta[1] == 0.0 {
            assert!(g[1].abs() <= lambda + 1e-3);
        } else {
            assert!((g[1] - lambda * fit.theta[1].signum()).abs() < 1e-3, "g {g:?} at {:?}", fit.theta);
        }
    }
}

#[test]
fn raw_coefficients_follow_the_scale() {
    // Scaling a statistic by s and penalizing at lambda is the raw problem
    // with weight lambda * s on that term.
    let unit = five_node_exact();
    let s = 2.5;
    let spec = ModelSpec::new(vec![
        Term::new(TermKind::Edges),
        Term::new(TermKind::Gwesp { alpha: 0.5 }).with_scale(s),
    ])
    .unwrap();
    let scaled = ExactModel::new(&spec, &AttributeTable::new(5), 5).unwrap();
    let lambda = 0.3 * scaled.lambda_max(&observed(&scaled)).unwrap();

    let obs_s = observed(&scaled);
    let mut est_s = Estimator::exact(&scaled, &obs_s, tight()).unwrap();
    let fit_s = est_s.fit(lambda, None).unwrap();
    let raw_s = fit_s.raw_theta(&spec.scales());

    let obs_u = observed(&unit);
    let mut est_u = Estimator::exact(&unit, &obs_u, tight()).unwrap();
    let fit_u = est_u.fit_weighted(&[0.0, lambda * s], None).unwrap();
    assert!(fit_s.theta[1] != 0.0);
    for (a, b) in raw_s.iter().zip(&fit_u.theta) {
        assert!((a - b).abs() < 1e-3, "{raw_s:?} vs {:?}", fit_u.theta);
    }
}

#[test]
fn sampled_gradient_is_unbiased() {
    let em = five_node_exact();
    let theta = [-0.4, 0.6];
    let exact = em.moments(&theta).unwrap();
    let cfg = SgdConfig {
        thin: Some(100),
        burn_in: Some(5_000),
        seed: 77,
        ..SgdConfig::default()
    };
    let m = 10_000;
    let mut source = McmcMoments::new(em.model(), &five_node_network(), &cfg).unwrap();
    let sample = source.sample(&theta, m).unwrap();
    let mean = sample.mean();
    for j in 0..2 {
        let se = (exact.cov(j, j) / m as f64).sqrt();
        assert!((mean[j] - exact.mean[j]).abs() < 4.0 * se, "term {j}: {} vs {} (se {se})", mean[j], exact.mean[j]);
    }
}

#[test]
fn mcmc_fit_is_reproducible_for_a_seed() {
    let em = five_node_exact();
    let net = five_node_network();
    let cfg = SgdConfig {
        max_iters: 200,
        ..SgdConfig::default()
    };
    let a = ergm_lasso::fit_lasso(em.model(), &net, 0.05, cfg.clone()).unwrap();
    let b = ergm_lasso::fit_lasso(em.model(), &net, 0.05, cfg).unwrap();
    assert_eq!(a.theta, b.theta);
    assert_eq!(a.iterations, b.iterations);
}
