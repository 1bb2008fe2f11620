use ergm_lasso::graph::{AttributeTable, Column, Dyad, Network};
use ergm_lasso::statistics::{gw_weights, Model, ModelSpec, TermKind};
use proptest::prelude::*;

fn arb_network(max_n: usize) -> impl Strategy<Value = Network> {
    (3..=max_n).prop_flat_map(|n| {
        let d = n * (n - 1) / 2;
        proptest::collection::vec(any::<bool>(), d).prop_map(move |bits| {
            let mut net = Network::empty(n);
            for (k, b) in bits.into_iter().enumerate() {
                if b {
                    net.toggle(Dyad::from_index(k, n).unwrap()).unwrap();
                }
            }
            net
        })
    })
}

fn structural_spec(alpha: f64) -> ModelSpec {
    ModelSpec::from_kinds([
        TermKind::Edges,
        TermKind::Gwesp { alpha },
        TermKind::Gwnsp { alpha },
        TermKind::Gwdegree { alpha },
    ])
    .unwrap()
}

fn attributes(n: usize) -> AttributeTable {
    let mut t = AttributeTable::new(n);
    t.push(Column::numeric("x", (0..n).map(|i| (i % 4) as f64).collect())).unwrap();
    let g: Vec<String> = (0..n).map(|i| ["a", "b"][i % 2].to_string()).collect();
    t.push(Column::categorical("g", &g, None, Some("a")).unwrap()).unwrap();
    t
}

fn permuted(net: &Network, perm: &[usize]) -> Network {
    let edges: Vec<(usize, usize)> = net.edges().into_iter().map(|(i, j)| (perm[i], perm[j])).collect();
    Network::from_edges(net.n_nodes(), &edges).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn change_statistics_match_recomputation(net in arb_network(12), alpha in 0.1f64..2.0, k in any::<prop::sample::Index>()) {
        let n = net.n_nodes();
        let spec = ModelSpec::from_kinds([
            TermKind::Edges,
            TermKind::Gwesp { alpha },
            TermKind::Gwnsp { alpha },
            TermKind::Gwdegree { alpha },
            TermKind::NodeCov { column: "x".into() },
            TermKind::NodeFactor { column: "g".into(), level: "b".into() },
            TermKind::NodeMatch { column: "g".into() },
        ]).unwrap();
        let model = Model::new(&spec, &attributes(n), n).unwrap();
        let d = Dyad::from_index(k.index(n * (n - 1) / 2), n).unwrap();
        let mut with = net.clone();
        let mut without = net.clone();
        if net.has_edge(d.i(), d.j()) { without.toggle(d).unwrap(); } else { with.toggle(d).unwrap(); }
        let delta = model.change_stats(&net, d).unwrap();
        let a = model.stats(&with).unwrap();
        let b = model.stats(&without).unwrap();
        for t in 0..spec.len() {
            prop_assert!((a[t] - b[t] - delta[t]).abs() < 1e-9, "term {t}: {} vs {}", a[t] - b[t], delta[t]);
        }
    }

    #[test]
    fn structural_statistics_ignore_node_labels(net in arb_network(10), seed in any::<u64>()) {
        let n = net.n_nodes();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut s = seed;
        for i in (1..n).rev() {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            perm.swap(i, (s >> 33) as usize % (i + 1));
        }
        let model = Model::new(&structural_spec(0.7), &AttributeTable::new(n), n).unwrap();
        let a = model.stats(&net).unwrap();
        let b = model.stats(&permuted(&net, &perm)).unwrap();
        for t in 0..a.len() {
            prop_assert!((a[t] - b[t]).abs() < 1e-9);
        }
    }

    #[test]
    fn edges_counts_ties_and_gw_terms_are_bounded(net in arb_network(12), alpha in 0.1f64..2.0) {
        let n = net.n_nodes();
        let model = Model::new(&structural_spec(alpha), &AttributeTable::new(n), n).unwrap();
        let s = model.stats(&net).unwrap();
        prop_assert_eq!(s[0], net.edge_count() as f64);
        let cap = *gw_weights(alpha, n).last().unwrap();
        // Each edge (gwesp), dyad (gwnsp) or node (gwdegree) contributes at most the largest weight.
        prop_assert!(s[1] >= 0.0 && s[1] <= net.edge_count() as f64 * cap + 1e-9);
        prop_assert!(s[2] >= 0.0 && s[2] <= (n * (n - 1) / 2) as f64 * cap + 1e-9);
        prop_assert!(s[3] >= 0.0 && s[3] <= n as f64 * cap + 1e-9);
    }

    #[test]
    fn scaled_statistics_divide_by_scale(net in arb_network(8), scale in 0.1f64..10.0) {
        let n = net.n_nodes();
        let mut spec = structural_spec(0.5);
        spec.set_scale(1, scale).unwrap();
        let model = Model::new(&spec, &AttributeTable::new(n), n).unwrap();
        let raw = model.stats(&net).unwrap();
        let scaled = model.scaled_stats(&net).unwrap();
        prop_assert!((scaled[1] * scale - raw[1]).abs() < 1e-9 * raw[1].abs().max(1.0));
        prop_assert_eq!(scaled[0], raw[0]);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn attribute_counts_are_bounded_by_ties(net in arb_network(12)) {
        let n = net.n_nodes();
        let spec = ModelSpec::from_kinds([
            TermKind::Edges,
            TermKind::NodeFactor { column: "g".into(), level: "b".into() },
            TermKind::NodeMatch { column: "g".into() },
        ]).unwrap();
        let s = Model::new(&spec, &attributes(n), n).unwrap().stats(&net).unwrap();
        prop_assert!(s[1] <= 2.0 * s[0]);
        prop_assert!(s[2] <= s[0]);
    }
}

#[test]
fn gw_terms_on_empty_and_complete_graphs() {
    for n in 3..9 {
        let model = Model::new(&structural_spec(0.5), &AttributeTable::new(n), n).unwrap();
        let empty = model.stats(&Network::empty(n)).unwrap();
        assert_eq!(&empty[1..], &[0.0, 0.0, 0.0]);
        let full = model.stats(&Network::complete(n)).unwrap();
        assert_eq!(full[2], 0.0, "gwnsp of K{n}");
        assert!(full[1] > 0.0);
    }
}

#[test]
fn gw_weights_closed_form() {
    let alpha: f64 = 0.5;
    let w = gw_weights(alpha, 6);
    for (k, wk) in w.iter().enumerate() {
        let expected = alpha.exp() * (1.0 - (1.0 - (-alpha).exp()).powi(k as i32));
        assert!((wk - expected).abs() < 1e-12, "k = {k}");
    }
}

#[test]
fn star_has_no_edgewise_shared_partners() {
    let net = Network::from_edges(5, &[(0, 1), (0, 2), (0, 3), (0, 4)]).unwrap();
    let model = Model::new(&structural_spec(0.5), &AttributeTable::new(5), 5).unwrap();
    let s = model.stats(&net).unwrap();
    assert_eq!(s[1], 0.0);
    // Six leaf pairs share the hub.
    let w1 = gw_weights(0.5, 5)[1];
    assert!((s[2] - 6.0 * w1).abs() < 1e-12);
}
