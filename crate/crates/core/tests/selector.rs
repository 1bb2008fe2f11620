mod common;

use ergm_lasso::estimator::{Estimator, Fit, FitTrace, SgdConfig};
use ergm_lasso::graph::AttributeTable;
use ergm_lasso::oracle::ExactModel;
use ergm_lasso::selector::{
    compute_path_with, estimate_loglik, inference_at, rank, BridgeConfig, InferenceConfig, LambdaGrid,
    PathConfig, PathResult,
};
use ergm_lasso::statistics::{ModelSpec, TermKind};

use common::{five_node_exact, five_node_network, logit};

fn three_term() -> ExactModel {
    let spec = ModelSpec::from_kinds([
        TermKind::Edges,
        TermKind::Gwesp { alpha: 0.5 },
        TermKind::Gwdegree { alpha: 0.5 },
    ])
    .unwrap();
    ExactModel::new(&spec, &AttributeTable::new(5), 5).unwrap()
}

fn exact_path(em: &ExactModel, points: usize) -> PathResult {
    let obs = em.model().scaled_stats(&five_node_network()).unwrap();
    let lmax = em.lambda_max(&obs).unwrap();
    let grid = LambdaGrid::geometric(lmax, 0.01, points, true).unwrap();
    let cfg = PathConfig {
        sgd: SgdConfig {
            tol: 1e-7,
            max_iters: 50_000,
            ..SgdConfig::default()
        },
        ..PathConfig::default()
    };
    let mut est = Estimator::exact(em, &obs, cfg.sgd.clone()).unwrap();
    compute_path_with(&mut est, em.spec(), &grid, &cfg).unwrap()
}

#[test]
fn importance_is_the_largest_active_lambda() {
    let em = three_term();
    let path = exact_path(&em, 15);
    assert!(path.converged.iter().all(|c| *c));
    for j in 1..path.labels.len() {
        let expected = path
            .grid
            .iter()
            .zip(&path.coefficients)
            .filter(|(_, row)| row[j] != 0.0)
            .map(|(l, _)| *l)
            .fold(None, |a: Option<f64>, l| Some(a.map_or(l, |x| x.max(l))));
        assert_eq!(path.importance[j], expected, "term {}", path.labels[j]);
    }
    // At the first grid value everything penalized is zero.
    assert!(path.coefficients[0][1..].iter().all(|c| *c == 0.0));
}

#[test]
fn ranking_agrees_with_exact_activation_points() {
    let em = three_term();
    let obs = em.model().scaled_stats(&five_node_network()).unwrap();
    let path = exact_path(&em, 25);
    let grid = &path.grid;
    for j in 1..path.labels.len() {
        let act = em.activation_lambda(&obs, j).unwrap();
        let expect_idx = act.map(|a| grid.iter().position(|&l| l <= a * (1.0 + 1e-9)).unwrap());
        let got_idx = path.importance[j].map(|r| grid.iter().position(|&l| l == r).unwrap());
        match (expect_idx, got_idx) {
            (Some(e), Some(g)) => assert!(e.abs_diff(g) <= 1, "{}: grid index {g} vs {e}", path.labels[j]),
            (None, None) => {}
            other => panic!("{}: {other:?}", path.labels[j]),
        }
    }
    let mut by_activation: Vec<usize> = (1..path.labels.len()).collect();
    by_activation.sort_by(|&a, &b| {
        let act = |j| em.activation_lambda(&obs, j).unwrap().unwrap_or(-1.0);
        act(b).total_cmp(&act(a))
    });
    let r = rank(&path);
    if path.importance[r[0]] != path.importance[r[1]] {
        assert_eq!(r, by_activation);
    }
}

fn fit_at(theta: Vec<f64>) -> Fit {
    Fit {
        theta,
        lambda: 0.0,
        converged: true,
        iterations: 0,
        trace: FitTrace::default(),
    }
}

#[test]
fn standard_errors_match_the_exact_information() {
    let em = five_node_exact();
    let net = five_node_network();
    let obs = em.model().scaled_stats(&net).unwrap();
    let mle = em.mle(&obs).unwrap();
    let c = em.moments(&mle).unwrap();
    let det = c.cov(0, 0) * c.cov(1, 1) - c.cov(0, 1) * c.cov(1, 0);
    let exact_se = [(c.cov(1, 1) / det).sqrt(), (c.cov(0, 0) / det).sqrt()];
    let cfg = InferenceConfig {
        cov_draws: 20_000,
        thin: Some(50),
        ..InferenceConfig::default()
    };
    let report = inference_at(em.model(), &net, &fit_at(mle), &cfg).unwrap();
    for (t, se) in report.terms.iter().zip(exact_se) {
        let rel = (t.std_error - se).abs() / se;
        assert!(rel < 0.10, "{}: {} vs {se}", t.term, t.std_error);
    }
    assert_eq!(report.k, 2);
    assert!((report.aic - (4.0 - 2.0 * report.loglik)).abs() < 1e-12);
}

#[test]
fn loglik_at_the_mle_beats_the_starting_point() {
    let em = five_node_exact();
    let net = five_node_network();
    let obs = em.model().scaled_stats(&net).unwrap();
    let mle = em.mle(&obs).unwrap();
    let start = [logit(net.density()), 0.0];
    let at_start = em.log_likelihood(&obs, &start).unwrap();
    let cfg = BridgeConfig {
        m: 2000,
        ..BridgeConfig::default()
    };
    let at_mle = estimate_loglik(em.model(), &net, &mle, &cfg).unwrap();
    assert!(at_mle >= at_start - 0.1, "{at_mle} < {at_start}");
    let exact = em.log_likelihood(&obs, &mle).unwrap();
    assert!((at_mle - exact).abs() < 0.05, "{at_mle} vs {exact}");
}
