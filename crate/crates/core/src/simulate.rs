//! Generators for the synthetic study networks.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{dyad_count, AttributeTable, Column, Network};
use crate::sampler::{rng_for, sample_networks, ChainInit, SamplerConfig};
use crate::statistics::{Model, ModelSpec, TermKind, DEFAULT_ALPHA};

/// Name of the binary node attribute used by the attribute setups.
pub const ATTRIBUTE: &str = "x";

/// Tie probabilities when neither, one, or both endpoints have `x = 1`.
pub const ATTRIBUTE_TIE_PROB: [f64; 3] = [0.05, 0.15, 0.30];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Setup {
    /// edges −3.5, gwesp 1.0.
    Gwesp,
    /// edges −2.0, gwnsp 0.5.
    Gwnsp,
    /// Erdős–Rényi, edges −1.5.
    Bernoulli,
    /// Ties depend only on a binary node attribute.
    Attribute,
    /// gwesp generator; the node attribute is drawn but ignored.
    AttributeIgnored,
}

impl Setup {
    pub fn all() -> [Setup; 5] {
        [
            Setup::Gwesp,
            Setup::Gwnsp,
            Setup::Bernoulli,
            Setup::Attribute,
            Setup::AttributeIgnored,
        ]
    }

    pub fn name(&self) -> &'static str {
        match self {
            Setup::Gwesp => "gwesp",
            Setup::Gwnsp => "gwnsp",
            Setup::Bernoulli => "bernoulli",
            Setup::Attribute => "attribute",
            Setup::AttributeIgnored => "attribute_ignored",
        }
    }

    pub fn parse(s: &str) -> Result<Setup> {
        Setup::all()
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| Error::Usage(format!("unknown setup '{s}'")))
    }

    pub fn has_attribute(&self) -> bool {
        matches!(self, Setup::Attribute | Setup::AttributeIgnored)
    }

    /// Generating model and parameter (raw units), if the setup is an ERGM.
    pub fn generator(&self) -> Option<(ModelSpec, Vec<f64>)> {
        let (kinds, theta) = match self {
            Setup::Gwesp | Setup::AttributeIgnored => (
                vec![TermKind::Gwesp { alpha: DEFAULT_ALPHA }],
                vec![-3.5, 1.0],
            ),
            Setup::Gwnsp => (vec![TermKind::Gwnsp { alpha: DEFAULT_ALPHA }], vec![-2.0, 0.5]),
            Setup::Bernoulli => (vec![], vec![-1.5]),
            Setup::Attribute => return None,
        };
        Some((ModelSpec::from_kinds(kinds).expect("valid generator"), theta))
    }

    /// Candidate terms offered to the selector.
    pub fn candidates(&self) -> ModelSpec {
        let a = DEFAULT_ALPHA;
        let mut kinds = vec![
            TermKind::Gwesp { alpha: a },
            TermKind::Gwnsp { alpha: a },
            TermKind::Gwdegree { alpha: a },
        ];
        if self.has_attribute() {
            kinds.push(TermKind::NodeFactor {
                column: ATTRIBUTE.into(),
                level: "1".into(),
            });
        }
        ModelSpec::from_kinds(kinds).expect("valid candidates")
    }
}

/// One simulated network with its node attributes.
#[derive(Debug, Clone)]
pub struct Simulated {
    pub network: Network,
    pub attributes: AttributeTable,
}

/// Burn-in used when drawing from an ERGM generator, in sweeps over all dyads.
pub const GENERATOR_SWEEPS: usize = 200;

/// Binary attribute with `P(x = 1) = 1/2`.
pub fn binary_attribute(n: usize, seed: u64, stream: u64) -> AttributeTable {
    let mut rng = rng_for(seed, stream);
    let raw: Vec<String> = (0..n)
        .map(|_| if rng.gen::<bool>() { "1" } else { "0" }.to_string())
        .collect();
    let mut t = AttributeTable::new(n);
    let col = Column::categorical(
        ATTRIBUTE,
        &raw,
        Some(vec!["0".into(), "1".into()]),
        Some("0"),
    )
    .expect("binary levels");
    t.push(col).expect("single column");
    t
}

/// Draws `m` independent networks from `setup` on `n` nodes.
///
/// Replica `r` depends only on `(seed, r)`.
pub fn simulate(setup: Setup, n: usize, m: usize, seed: u64) -> Result<Vec<Simulated>> {
    use rayon::prelude::*;
    (0..m)
        .into_par_iter()
        .map(|r| replica(setup, n, seed, r as u64))
        .collect()
}

/// Replica `r` of `setup`.
pub fn replica(setup: Setup, n: usize, seed: u64, r: u64) -> Result<Simulated> {
    // Streams: 2r for the attribute, 2r + 1 for the ties.
    let attributes = if setup.has_attribute() {
        binary_attribute(n, seed, 2 * r)
    } else {
        AttributeTable::new(n)
    };
    let network = match setup.generator() {
        None => attribute_ties(&attributes, seed, 2 * r + 1)?,
        Some((spec, theta)) => {
            let model = Model::new(&spec, &AttributeTable::new(n), n)?;
            let d = dyad_count(n).max(1);
            let cfg = SamplerConfig {
                burn_in: GENERATOR_SWEEPS * d,
                thin: d,
                m: 1,
                seed: seed ^ (r + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15),
                init: ChainInit::Empty,
                chains: 1,
            };
            let (_, mut nets) = sample_networks(&model, &theta, &Network::empty(n), &cfg)?;
            nets.pop().expect("one draw")
        }
    };
    Ok(Simulated {
        network,
        attributes,
    })
}

fn attribute_ties(attrs: &AttributeTable, seed: u64, stream: u64) -> Result<Network> {
    let n = attrs.n_rows();
    let x: Vec<usize> = match attrs.get(ATTRIBUTE).map(|c| &c.values) {
        Some(crate::graph::ColumnValues::Categorical { codes, .. }) => codes.clone(),
        _ => return Err(Error::Spec(format!("attribute '{ATTRIBUTE}' missing"))),
    };
    let mut rng = rng_for(seed, stream);
    let mut net = Network::empty(n);
    for i in 0..n {
        for j in (i + 1)..n {
            if rng.gen::<f64>() < ATTRIBUTE_TIE_PROB[x[i] + x[j]] {
                net.toggle_unchecked(i, j);
            }
        }
    }
    Ok(net)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bernoulli_density_near_logistic() {
        let sims = simulate(Setup::Bernoulli, 50, 20, 3).unwrap();
        let mean = sims.iter().map(|s| s.network.density()).sum::<f64>() / 20.0;
        let p = 1.0 / (1.0 + 1.5f64.exp());
        assert!((mean - p).abs() < 0.01, "{mean} vs {p}");
    }

    #[test]
    fn attribute_tie_rates() {
        let s = replica(Setup::Attribute, 200, 9, 0).unwrap();
        let codes = match &s.attributes.get(ATTRIBUTE).unwrap().values {
            crate::graph::ColumnValues::Categorical { codes, .. } => codes.clone(),
            _ => unreachable!(),
        };
        let mut on = [0.0; 3];
        let mut all = [0.0; 3];
        for i in 0..200 {
            for j in (i + 1)..200 {
                let k = codes[i] + codes[j];
                all[k] += 1.0;
                if s.network.has_edge(i, j) {
                    on[k] += 1.0;
                }
            }
        }
        for k in 0..3 {
            assert!((on[k] / all[k] - ATTRIBUTE_TIE_PROB[k]).abs() < 0.02);
        }
    }

    #[test]
    fn replicas_are_reproducible() {
        let a = replica(Setup::Gwesp, 20, 5, 3).unwrap();
        let b = replica(Setup::Gwesp, 20, 5, 3).unwrap();
        assert_eq!(a.network, b.network);
        let c = replica(Setup::Gwesp, 20, 5, 4).unwrap();
        assert_ne!(a.network, c.network);
    }

    #[test]
    fn candidates_include_attribute_only_when_drawn() {
        assert_eq!(Setup::Gwesp.candidates().len(), 4);
        assert_eq!(Setup::Attribute.candidates().len(), 5);
        assert_eq!(Setup::parse("gwnsp").unwrap(), Setup::Gwnsp);
        assert!(Setup::parse("nope").is_err());
    }
}
