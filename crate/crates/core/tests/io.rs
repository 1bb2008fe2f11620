use std::path::{Path, PathBuf};

use ergm_lasso::io::{load_dataset, read_edge_list, SpecFile};
use ergm_lasso::statistics::Model;
use ergm_lasso::Error;

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

#[test]
fn gang_style_fixture_expands_categorical_levels() {
    let ds = load_dataset(&data("gang_mini.edges"), Some(&data("gang_mini.csv")), &data("gang_mini.json")).unwrap();
    assert_eq!(ds.network.n_nodes(), 7);
    assert_eq!(ds.network.edge_count(), 7);
    // Node 7 only appears on a single-id line and stays isolated.
    assert_eq!(ds.network.degree(6), 0);
    let labels = ds.spec.labels();
    for l in ["nodefactor.Birthplace.2", "nodefactor.Birthplace.3", "nodefactor.Birthplace.4", "nodematch.Prison"] {
        assert!(labels.iter().any(|x| x == l), "{l} missing from {labels:?}");
    }
    assert!(!labels.iter().any(|x| x == "nodefactor.Birthplace.1"));
    let model = Model::new(&ds.spec, &ds.attributes, 7).unwrap();
    let s = model.stats(&ds.network).unwrap();
    let k = ds.spec.position("nodematch.Birthplace").unwrap();
    // Same-birthplace ties: 2-6 (both 2) and 3-4 (both 3).
    assert_eq!(s[k], 2.0);
}

#[test]
fn law_firm_style_fixture_loads() {
    let ds = load_dataset(
        &data("lawfirm_mini.edges"),
        Some(&data("lawfirm_mini.csv")),
        &data("lawfirm_mini.json"),
    )
    .unwrap();
    assert_eq!(ds.network.n_nodes(), 6);
    // 4 structural, 1 + 1 + 2 + 1 nodefactor levels, 2 nodecov, 5 nodematch.
    assert_eq!(ds.spec.len(), 16);
    let labels = ds.spec.labels();
    assert!(labels.contains(&"nodefactor.status.1".to_string()), "{labels:?}");
    assert!(labels.contains(&"nodematch.office".to_string()));
    let model = Model::new(&ds.spec, &ds.attributes, 6).unwrap();
    let s = model.stats(&ds.network).unwrap();
    let k = ds.spec.position("nodecov.years").unwrap();
    let years = [31.0, 32.0, 13.0, 3.0, 2.0, 1.0];
    let expected: f64 = ds.network.edges().iter().map(|&(i, j)| years[i] + years[j]).sum();
    assert_eq!(s[k], expected);
}

#[test]
fn spec_file_round_trips() {
    let spec = SpecFile::read(&data("lawfirm_mini.json")).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("spec.json");
    spec.write(&out).unwrap();
    assert_eq!(SpecFile::read(&out).unwrap(), spec);
}

#[test]
fn edge_ids_outside_the_attribute_file_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let edges = dir.path().join("g.edges");
    std::fs::write(&edges, "1 2\n2 99\n").unwrap();
    let ids: Vec<String> = (1..=7).map(|i| i.to_string()).collect();
    match read_edge_list(&edges, Some(&ids)) {
        Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
        other => panic!("expected a parse error, got {other:?}"),
    }
}
