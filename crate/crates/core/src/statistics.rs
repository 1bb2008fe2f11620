//! Sufficient statistics, change statistics and standardization.
//!
//! A [`ModelSpec`] is the user-facing description of the model terms. Binding
//! it to an [`AttributeTable`] and a node count gives a [`Model`], which owns
//! everything needed to evaluate statistics in the sampler's inner loop.

use std::fmt;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::{AttributeTable, ColumnValues, Dyad, Network};
use crate::sampler;

/// Default decay for the geometrically weighted terms.
pub const DEFAULT_ALPHA: f64 = 0.5;

/// Default number of Erdős–Rényi draws used by [`standardize`].
pub const DEFAULT_STANDARDIZE_DRAWS: usize = 500;

#[derive(Debug, Clone, PartialEq)]
pub enum TermKind {
    Edges,
    Gwesp { alpha: f64 },
    Gwnsp { alpha: f64 },
    Gwdegree { alpha: f64 },
    NodeCov { column: String },
    NodeFactor { column: String, level: String },
    NodeMatch { column: String },
}

impl TermKind {
    /// Label in the style used by common ERGM software, e.g. `gwesp.fixed.0.5`.
    pub fn default_label(&self) -> String {
        match self {
            TermKind::Edges => "edges".to_string(),
            TermKind::Gwesp { alpha } => format!("gwesp.fixed.{alpha}"),
            TermKind::Gwnsp { alpha } => format!("gwnsp.fixed.{alpha}"),
            TermKind::Gwdegree { alpha } => format!("gwdegree.fixed.{alpha}"),
            TermKind::NodeCov { column } => format!("nodecov.{column}"),
            TermKind::NodeFactor { column, level } => format!("nodefactor.{column}.{level}"),
            TermKind::NodeMatch { column } => format!("nodematch.{column}"),
        }
    }

    fn alpha(&self) -> Option<f64> {
        match self {
            TermKind::Gwesp { alpha } | TermKind::Gwnsp { alpha } | TermKind::Gwdegree { alpha } => {
                Some(*alpha)
            }
            _ => None,
        }
    }
}

impl fmt::Display for TermKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.default_label())
    }
}

/// One model term with its scaling factor and penalization flag.
#[derive(Debug, Clone, PartialEq)]
pub struct Term {
    pub kind: TermKind,
    pub label: String,
    /// Positive divisor applied to the raw statistic.
    pub scale: f64,
    /// Scale was supplied by the user and must not be replaced by standardization.
    pub scale_fixed: bool,
    pub penalized: bool,
}

impl Term {
    pub fn new(kind: TermKind) -> Self {
        let penalized = kind != TermKind::Edges;
        Term {
            label: kind.default_label(),
            kind,
            scale: 1.0,
            scale_fixed: false,
            penalized,
        }
    }

    pub fn with_scale(mut self, scale: f64) -> Self {
        self.scale = scale;
        self.scale_fixed = true;
        self
    }

    pub fn unpenalized(mut self) -> Self {
        self.penalized = false;
        self
    }
}

/// Ordered list of model terms; term 0 is always `edges`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    terms: Vec<Term>,
}

impl ModelSpec {
    /// Validates and builds a spec. An `edges` term is prepended when absent.
    pub fn new(mut terms: Vec<Term>) -> Result<Self> {
        let edges_at: Vec<usize> = terms
            .iter()
            .enumerate()
            .filter(|(_, t)| t.kind == TermKind::Edges)
            .map(|(k, _)| k)
            .collect();
        match edges_at.as_slice() {
            [] => terms.insert(0, Term::new(TermKind::Edges)),
            [0] => {}
            [k] => {
                return Err(Error::Spec(format!(
                    "the edges term must come first (found at position {k})"
                )))
            }
            _ => return Err(Error::Spec("more than one edges term".into())),
        }
        let edges = &mut terms[0];
        if edges.scale != 1.0 || edges.penalized {
            return Err(Error::Spec("the edges term is never scaled or penalized".into()));
        }
        for (k, t) in terms.iter().enumerate() {
            if let Some(alpha) = t.kind.alpha() {
                if !(alpha > 0.0 && alpha.is_finite()) {
                    return Err(Error::Spec(format!("term '{}': decay must be positive", t.label)));
                }
            }
            if !(t.scale > 0.0 && t.scale.is_finite()) {
                return Err(Error::Spec(format!("term '{}': scale must be positive", t.label)));
            }
            if terms[..k].iter().any(|u| u.label == t.label) {
                return Err(Error::Spec(format!("duplicate term label '{}'", t.label)));
            }
        }
        Ok(ModelSpec { terms })
    }

    /// Spec built from term kinds with default labels, unit scales and all
    /// non-edges terms penalized.
    pub fn from_kinds(kinds: impl IntoIterator<Item = TermKind>) -> Result<Self> {
        Self::new(kinds.into_iter().map(Term::new).collect())
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn labels(&self) -> Vec<String> {
        self.terms.iter().map(|t| t.label.clone()).collect()
    }

    pub fn scales(&self) -> Vec<f64> {
        self.terms.iter().map(|t| t.scale).collect()
    }

    pub fn penalized(&self) -> Vec<bool> {
        self.terms.iter().map(|t| t.penalized).collect()
    }

    pub fn position(&self, label: &str) -> Option<usize> {
        self.terms.iter().position(|t| t.label == label)
    }

    /// Copy with all scales reset to 1.
    pub fn unscaled(&self) -> ModelSpec {
        let mut out = self.clone();
        for t in &mut out.terms {
            t.scale = 1.0;
        }
        out
    }

    /// Sub-model keeping only the terms at `indices` (edges is always kept).
    pub fn subset(&self, indices: &[usize]) -> Result<ModelSpec> {
        let mut keep: Vec<usize> = indices.iter().copied().filter(|&k| k != 0).collect();
        keep.sort_unstable();
        keep.dedup();
        if let Some(&k) = keep.iter().find(|&&k| k >= self.terms.len()) {
            return Err(Error::Usage(format!("term index {k} out of range")));
        }
        let mut terms = vec![self.terms[0].clone()];
        terms.extend(keep.iter().map(|&k| self.terms[k].clone()));
        ModelSpec::new(terms)
    }

    pub fn set_scale(&mut self, k: usize, scale: f64) -> Result<()> {
        if k == 0 && scale != 1.0 {
            return Err(Error::Spec("the edges term is never scaled".into()));
        }
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::Spec(format!("scale {scale} must be positive")));
        }
        self.terms[k].scale = scale;
        Ok(())
    }
}

/// Statistic vector aligned with a [`ModelSpec`].
#[derive(Debug, Clone, PartialEq)]
pub struct StatVector {
    pub values: Vec<f64>,
    pub scaled: bool,
}

impl StatVector {
    pub fn raw(values: Vec<f64>) -> Self {
        StatVector {
            values,
            scaled: false,
        }
    }

    /// Divides by the model's scale factors; a no-op on already scaled vectors.
    pub fn to_scaled(&self, spec: &ModelSpec) -> StatVector {
        if self.scaled {
            return self.clone();
        }
        StatVector {
            values: self
                .values
                .iter()
                .zip(spec.terms())
                .map(|(v, t)| v / t.scale)
                .collect(),
            scaled: true,
        }
    }
}

#[derive(Debug, Clone)]
enum BoundTerm {
    Edges,
    Gwesp(Vec<f64>),
    Gwnsp(Vec<f64>),
    Gwdegree(Vec<f64>),
    NodeCov(Vec<f64>),
    NodeFactor(Vec<bool>),
    NodeMatch(Vec<usize>),
}

/// Geometric weights `e^a (1 - (1 - e^-a)^k)` for `k = 0..=n`.
pub fn gw_weights(alpha: f64, n: usize) -> Vec<f64> {
    let r = 1.0 - (-alpha).exp();
    let ea = alpha.exp();
    (0..=n).map(|k| ea * (1.0 - r.powi(k as i32))).collect()
}

/// A [`ModelSpec`] bound to attribute data for networks of a fixed size.
#[derive(Debug, Clone)]
pub struct Model {
    spec: ModelSpec,
    n: usize,
    terms: Vec<BoundTerm>,
}

impl Model {
    pub fn new(spec: &ModelSpec, attrs: &AttributeTable, n: usize) -> Result<Self> {
        let column = |name: &str| {
            let c = attrs
                .get(name)
                .ok_or_else(|| Error::Spec(format!("attribute column '{name}' not found")))?;
            if c.len() != n {
                return Err(Error::Spec(format!(
                    "attribute column '{name}' has {} rows, network has {n} nodes",
                    c.len()
                )));
            }
            Ok(c)
        };
        let mut terms = Vec::with_capacity(spec.len());
        for t in spec.terms() {
            let bound = match &t.kind {
                TermKind::Edges => BoundTerm::Edges,
                TermKind::Gwesp { alpha } => BoundTerm::Gwesp(gw_weights(*alpha, n)),
                TermKind::Gwnsp { alpha } => BoundTerm::Gwnsp(gw_weights(*alpha, n)),
                TermKind::Gwdegree { alpha } => BoundTerm::Gwdegree(gw_weights(*alpha, n)),
                TermKind::NodeCov { column: name } => match &column(name)?.values {
                    ColumnValues::Numeric(v) => BoundTerm::NodeCov(v.clone()),
                    _ => {
                        return Err(Error::Spec(format!(
                            "nodecov needs a numeric column, '{name}' is categorical"
                        )))
                    }
                },
                TermKind::NodeFactor {
                    column: name,
                    level,
                } => match &column(name)?.values {
                    ColumnValues::Categorical {
                        levels,
                        reference,
                        codes,
                    } => {
                        let code = levels.iter().position(|l| l == level).ok_or_else(|| {
                            Error::Spec(format!("column '{name}' has no level '{level}'"))
                        })?;
                        if code == *reference {
                            return Err(Error::Spec(format!(
                                "nodefactor on '{name}': '{level}' is the reference level"
                            )));
                        }
                        BoundTerm::NodeFactor(codes.iter().map(|&c| c == code).collect())
                    }
                    _ => {
                        return Err(Error::Spec(format!(
                            "nodefactor needs a categorical column, '{name}' is numeric"
                        )))
                    }
                },
                TermKind::NodeMatch { column: name } => match &column(name)?.values {
                    ColumnValues::Categorical { codes, .. } => BoundTerm::NodeMatch(codes.clone()),
                    _ => {
                        return Err(Error::Spec(format!(
                            "nodematch needs a categorical column, '{name}' is numeric"
                        )))
                    }
                },
            };
            terms.push(bound);
        }
        Ok(Model {
            spec: spec.clone(),
            n,
            terms,
        })
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn n_nodes(&self) -> usize {
        self.n
    }

    pub fn n_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn scales(&self) -> Vec<f64> {
        self.spec.scales()
    }

    fn check_size(&self, net: &Network) -> Result<()> {
        if net.n_nodes() != self.n {
            return Err(Error::Usage(format!(
                "model bound for {} nodes, network has {}",
                self.n,
                net.n_nodes()
            )));
        }
        Ok(())
    }

    /// Raw statistic vector of `net`.
    pub fn stats(&self, net: &Network) -> Result<Vec<f64>> {
        self.check_size(net)?;
        Ok(self.terms.iter().map(|t| self.term_stat(t, net)).collect())
    }

    /// Scaled statistic vector of `net`.
    pub fn scaled_stats(&self, net: &Network) -> Result<Vec<f64>> {
        let mut s = self.stats(net)?;
        for (v, t) in s.iter_mut().zip(self.spec.terms()) {
            *v /= t.scale;
        }
        Ok(s)
    }

    fn term_stat(&self, term: &BoundTerm, net: &Network) -> f64 {
        let n = self.n;
        match term {
            BoundTerm::Edges => net.edge_count() as f64,
            BoundTerm::Gwesp(w) => net
                .edges()
                .iter()
                .map(|&(i, j)| w[net.shared_partners_unchecked(i, j)])
                .sum(),
            BoundTerm::Gwnsp(w) => {
                let mut s = 0.0;
                for i in 0..n {
                    for j in (i + 1)..n {
                        if !net.has_edge(i, j) {
                            s += w[net.shared_partners_unchecked(i, j)];
                        }
                    }
                }
                s
            }
            BoundTerm::Gwdegree(w) => (0..n).map(|i| w[net.degree(i)]).sum(),
            BoundTerm::NodeCov(x) => net.edges().iter().map(|&(i, j)| x[i] + x[j]).sum(),
            BoundTerm::NodeFactor(f) => net
                .edges()
                .iter()
                .map(|&(i, j)| (f[i] as u32 + f[j] as u32) as f64)
                .sum(),
            BoundTerm::NodeMatch(c) => net.edges().iter().filter(|&&(i, j)| c[i] == c[j]).count() as f64,
        }
    }

    /// Writes `s(y with {i,j}) - s(y without {i,j})` (raw units) into `out`.
    ///
    /// The current state of the dyad in `net` does not matter.
    pub(crate) fn change_into(&self, net: &Network, i: usize, j: usize, out: &mut [f64]) {
        // Quantities below are evaluated on the network with {i,j} absent.
        let on = net.has_edge(i, j) as usize;
        for (slot, term) in out.iter_mut().zip(&self.terms) {
            *slot = match term {
                BoundTerm::Edges => 1.0,
                BoundTerm::Gwesp(w) => {
                    let mut d = w[net.shared_partners_unchecked(i, j)];
                    for k in net.common_neighbors(i, j) {
                        let sik = net.shared_partners_unchecked(i, k) - on;
                        let sjk = net.shared_partners_unchecked(j, k) - on;
                        d += w[sik + 1] - w[sik] + w[sjk + 1] - w[sjk];
                    }
                    d
                }
                BoundTerm::Gwnsp(w) => {
                    let mut d = -w[net.shared_partners_unchecked(i, j)];
                    // k adjacent to j only: the non-edge {i,k} gains partner j.
                    for k in net.neighbors_minus(j, i) {
                        if k != i {
                            let sik = net.shared_partners_unchecked(i, k) - on;
                            d += w[sik + 1] - w[sik];
                        }
                    }
                    for k in net.neighbors_minus(i, j) {
                        if k != j {
                            let sjk = net.shared_partners_unchecked(j, k) - on;
                            d += w[sjk + 1] - w[sjk];
                        }
                    }
                    d
                }
                BoundTerm::Gwdegree(w) => {
                    let di = net.degree(i) - on;
                    let dj = net.degree(j) - on;
                    w[di + 1] - w[di] + w[dj + 1] - w[dj]
                }
                BoundTerm::NodeCov(x) => x[i] + x[j],
                BoundTerm::NodeFactor(f) => (f[i] as u32 + f[j] as u32) as f64,
                BoundTerm::NodeMatch(c) => (c[i] == c[j]) as u32 as f64,
            };
        }
    }

    /// Raw change statistic for dyad `d`.
    pub fn change_stats(&self, net: &Network, d: Dyad) -> Result<Vec<f64>> {
        self.check_size(net)?;
        if d.j() >= self.n {
            return Err(Error::Usage(format!("dyad ({}, {}) out of range", d.i(), d.j())));
        }
        let mut out = vec![0.0; self.terms.len()];
        self.change_into(net, d.i(), d.j(), &mut out);
        Ok(out)
    }
}

/// Raw statistic vector of `net` under `spec`.
pub fn compute_stats(net: &Network, attrs: &AttributeTable, spec: &ModelSpec) -> Result<StatVector> {
    let model = Model::new(spec, attrs, net.n_nodes())?;
    Ok(StatVector::raw(model.stats(net)?))
}

/// Raw change statistic `s(y+) - s(y-)` for dyad `d`.
pub fn change_stats(
    net: &Network,
    attrs: &AttributeTable,
    spec: &ModelSpec,
    d: Dyad,
) -> Result<StatVector> {
    let model = Model::new(spec, attrs, net.n_nodes())?;
    Ok(StatVector::raw(model.change_stats(net, d)?))
}

/// Outcome of [`standardize`].
#[derive(Debug, Clone)]
pub struct Standardization {
    /// Input spec with scale factors set and unusable terms removed.
    pub spec: ModelSpec,
    /// Reference-sample standard deviation of every input term (edges included).
    pub sd: Vec<f64>,
    /// Labels of terms whose statistic was constant over the reference sample.
    pub dropped: Vec<String>,
}

/// Sample standard deviation with an `m - 1` denominator.
pub fn sample_sd(xs: &[f64]) -> f64 {
    let m = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / m;
    (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (m - 1.0)).sqrt()
}

/// Sets each non-edges scale factor to the standard deviation of its
/// statistic over `m` Erdős–Rényi networks drawn at the observed density.
///
/// Terms carrying a user-fixed scale keep it. Terms with zero spread are
/// removed and listed in [`Standardization::dropped`].
pub fn standardize(
    spec: &ModelSpec,
    observed: &Network,
    attrs: &AttributeTable,
    m: usize,
    seed: u64,
) -> Result<Standardization> {
    if m < 2 {
        return Err(Error::Usage(format!("standardization needs at least 2 draws, got {m}")));
    }
    let n = observed.n_nodes();
    let model = Model::new(&spec.unscaled(), attrs, n)?;
    let p = observed.density();
    let rows: Vec<Vec<f64>> = (0..m)
        .into_par_iter()
        .map(|k| {
            let net = sampler::er_draw(n, p, seed, k as u64);
            model.stats(&net)
        })
        .collect::<Result<_>>()?;
    let sd: Vec<f64> = (0..spec.len())
        .map(|c| sample_sd(&rows.iter().map(|r| r[c]).collect::<Vec<_>>()))
        .collect();

    let mut terms = Vec::with_capacity(spec.len());
    let mut dropped = Vec::new();
    for (k, t) in spec.terms().iter().enumerate() {
        let mut t = t.clone();
        if k > 0 && !t.scale_fixed {
            if !(sd[k] > 1e-12) {
                log::warn!("term '{}' is constant under the reference model; dropped", t.label);
                dropped.push(t.label.clone());
                continue;
            }
            t.scale = sd[k];
        }
        terms.push(t);
    }
    Ok(Standardization {
        spec: ModelSpec::new(terms)?,
        sd,
        dropped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Column;

    fn spec(kinds: Vec<TermKind>) -> ModelSpec {
        ModelSpec::from_kinds(kinds).unwrap()
    }

    fn gwesp() -> TermKind {
        TermKind::Gwesp { alpha: 0.5 }
    }

    #[test]
    fn triangle_gwesp_equals_edge_count() {
        let k3 = Network::complete(3);
        for alpha in [0.1, 0.5, 2.0] {
            let s = compute_stats(&k3, &AttributeTable::new(3), &spec(vec![TermKind::Gwesp { alpha }]))
                .unwrap();
            assert_eq!(s.values[0], 3.0);
            assert!((s.values[1] - 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn four_cycle_gwnsp() {
        let c4 = Network::from_edges(4, &[(0, 1), (1, 2), (2, 3), (3, 0)]).unwrap();
        let s = compute_stats(&c4, &AttributeTable::new(4), &spec(vec![TermKind::Gwnsp { alpha: 0.5 }]))
            .unwrap();
        // Brute force: count non-edges by shared partners.
        let mut nsp = [0usize; 4];
        for i in 0..4 {
            for j in (i + 1)..4 {
                if !c4.has_edge(i, j) {
                    let sp = (0..4).filter(|&k| c4.has_edge(i, k) && c4.has_edge(j, k)).count();
                    nsp[sp] += 1;
                }
            }
        }
        assert_eq!(nsp, [0, 0, 2, 0]);
        let expected = 2.0 * 0.5f64.exp() * (1.0 - (1.0 - (-0.5f64).exp()).powi(2));
        assert!((s.values[1] - expected).abs() < 1e-12);
    }

    fn path_attrs() -> AttributeTable {
        let mut attrs = AttributeTable::new(3);
        let raw: Vec<String> = ["1", "0", "1"].iter().map(|s| s.to_string()).collect();
        attrs.push(Column::categorical("x", &raw, None, Some("0")).unwrap()).unwrap();
        attrs.push(Column::numeric("xn", vec![1.0, 0.0, 1.0])).unwrap();
        attrs
    }

    #[test]
    fn attribute_terms_on_path() {
        let net = Network::from_edges(3, &[(0, 1), (1, 2)]).unwrap();
        let sp = spec(vec![
            TermKind::NodeFactor {
                column: "x".into(),
                level: "1".into(),
            },
            TermKind::NodeMatch { column: "x".into() },
            TermKind::NodeCov { column: "xn".into() },
        ]);
        let s = compute_stats(&net, &path_attrs(), &sp).unwrap();
        assert_eq!(s.values, vec![2.0, 2.0, 0.0, 2.0]);
    }

    #[test]
    fn spec_errors() {
        let attrs = path_attrs();
        let net = Network::empty(3);
        let missing = spec(vec![TermKind::NodeCov { column: "nope".into() }]);
        assert!(matches!(compute_stats(&net, &attrs, &missing), Err(Error::Spec(m)) if m.contains("nope")));
        let wrong_type = spec(vec![TermKind::NodeCov { column: "x".into() }]);
        assert!(compute_stats(&net, &attrs, &wrong_type).is_err());
        let reference = spec(vec![TermKind::NodeFactor {
            column: "x".into(),
            level: "0".into(),
        }]);
        assert!(compute_stats(&net, &attrs, &reference).is_err());
        assert!(ModelSpec::new(vec![Term::new(gwesp()), Term::new(TermKind::Edges)]).is_err());
        assert!(ModelSpec::new(vec![Term::new(gwesp()), Term::new(gwesp())]).is_err());
        assert!(ModelSpec::from_kinds([TermKind::Gwesp { alpha: 0.0 }]).is_err());
        assert!(ModelSpec::new(vec![Term::new(TermKind::Edges).with_scale(2.0)]).is_err());
    }

    #[test]
    fn change_on_empty_network() {
        let net = Network::empty(3);
        let c = change_stats(&net, &AttributeTable::new(3), &spec(vec![]), Dyad::new(0, 1).unwrap())
            .unwrap();
        assert_eq!(c.values, vec![1.0]);
    }

    #[test]
    fn change_matches_recompute_on_triangle() {
        let k3 = Network::complete(3);
        let mut minus = k3.clone();
        let d = Dyad::new(0, 1).unwrap();
        minus.toggle(d).unwrap();
        let sp = spec(vec![gwesp()]);
        let a = AttributeTable::new(3);
        let full = compute_stats(&k3, &a, &sp).unwrap().values[1]
            - compute_stats(&minus, &a, &sp).unwrap().values[1];
        for net in [&k3, &minus] {
            let c = change_stats(net, &a, &sp, d).unwrap();
            assert!((c.values[1] - full).abs() < 1e-12);
        }
        // K3 has gwesp 3; removing an edge leaves two edges with no shared partner.
        assert!((full - 3.0).abs() < 1e-12);
    }

    #[test]
    fn gw_terms_vanish_where_expected() {
        let sp = spec(vec![
            gwesp(),
            TermKind::Gwnsp { alpha: 0.5 },
            TermKind::Gwdegree { alpha: 0.5 },
        ]);
        let a = AttributeTable::new(6);
        let empty = compute_stats(&Network::empty(6), &a, &sp).unwrap();
        assert_eq!(&empty.values[1..], &[0.0, 0.0, 0.0]);
        let full = compute_stats(&Network::complete(6), &a, &sp).unwrap();
        assert_eq!(full.values[2], 0.0);
    }

    #[test]
    fn scaled_vector_divides_by_scale() {
        let mut sp = spec(vec![gwesp()]);
        sp.set_scale(1, 4.0).unwrap();
        let s = compute_stats(&Network::complete(3), &AttributeTable::new(3), &sp).unwrap();
        let scaled = s.to_scaled(&sp);
        assert_eq!(scaled.values[0], 3.0);
        assert!((scaled.values[1] - 0.75).abs() < 1e-15);
        assert!(sp.set_scale(0, 2.0).is_err());
    }

    #[test]
    fn standardize_drops_constant_terms() {
        let net = Network::from_edges(6, &[(0, 1), (1, 2), (2, 3)]).unwrap();
        let mut attrs = AttributeTable::new(6);
        let raw: Vec<String> = vec!["a".to_string(); 6];
        attrs.push(Column::categorical("same", &raw, Some(vec!["a".into(), "b".into()]), Some("a")).unwrap())
            .unwrap();
        let sp = spec(vec![
            gwesp(),
            TermKind::NodeFactor {
                column: "same".into(),
                level: "b".into(),
            },
        ]);
        let st = standardize(&sp, &net, &attrs, 50, 3).unwrap();
        assert_eq!(st.dropped, vec!["nodefactor.same.b".to_string()]);
        assert_eq!(st.spec.len(), 2);
        assert_eq!(st.spec.terms()[0].scale, 1.0);
        assert!(st.spec.terms()[1].scale > 0.0);
        assert!(standardize(&sp, &net, &attrs, 1, 3).is_err());
    }

    #[test]
    fn standardize_keeps_fixed_scales() {
        let net = Network::from_edges(6, &[(0, 1), (1, 2), (2, 3)]).unwrap();
        let sp = ModelSpec::new(vec![Term::new(TermKind::Edges), Term::new(gwesp()).with_scale(7.0)]).unwrap();
        let st = standardize(&sp, &net, &AttributeTable::new(6), 20, 1).unwrap();
        assert_eq!(st.spec.terms()[1].scale, 7.0);
    }
}
