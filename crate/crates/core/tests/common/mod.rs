#![allow(dead_code)]

use ergm_lasso::graph::{AttributeTable, Network};
use ergm_lasso::oracle::ExactModel;
use ergm_lasso::statistics::{ModelSpec, TermKind};

/// Triangle 0-1-2 with a tail 1-3, 2-3, 3-4.
pub fn five_node_network() -> Network {
    Network::from_edges(5, &[(0, 1), (0, 2), (1, 2), (1, 3), (2, 3), (3, 4)]).unwrap()
}

pub fn gwesp_spec() -> ModelSpec {
    ModelSpec::from_kinds([TermKind::Gwesp { alpha: 0.5 }]).unwrap()
}

pub fn five_node_exact() -> ExactModel {
    ExactModel::new(&gwesp_spec(), &AttributeTable::new(5), 5).unwrap()
}

pub fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}
