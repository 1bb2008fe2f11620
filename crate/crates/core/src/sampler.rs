//! Metropolis–Hastings tie-toggle sampling from an ERGM, plus independent
//! Erdős–Rényi draws.
//!
//! Every chain owns its network and random stream. Multi-chain runs derive
//! chain `c`'s stream from `(seed, c)` and merge draws in chain order, so the
//! result does not depend on how rayon schedules the chains.

use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::{dyad_count, Network};
use crate::io;
use crate::statistics::Model;

/// Random stream `stream` of the master `seed`.
pub fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Where a chain starts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChainInit {
    Observed,
    Empty,
    ErDensity,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SamplerConfig {
    /// Toggle attempts discarded before the first retained draw.
    pub burn_in: usize,
    /// Toggle attempts between retained draws.
    pub thin: usize,
    /// Number of retained draws (over all chains).
    pub m: usize,
    pub seed: u64,
    pub init: ChainInit,
    /// Independent chains; draws are split evenly between them.
    pub chains: usize,
}

impl SamplerConfig {
    /// Defaults for an `n`-node network: burn-in of 20 sweeps, one sweep
    /// (`N(N-1)/2` attempts) per retained draw.
    pub fn for_nodes(n: usize, m: usize, seed: u64) -> Self {
        let d = dyad_count(n).max(1);
        SamplerConfig {
            burn_in: 20 * d,
            thin: d,
            m,
            seed,
            init: ChainInit::Observed,
            chains: 1,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.thin == 0 || self.m == 0 || self.chains == 0 {
            return Err(Error::Usage(
                "sampler needs thin >= 1, m >= 1 and at least one chain".into(),
            ));
        }
        Ok(())
    }
}

/// Retained statistic vectors, one row per draw.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    n_terms: usize,
    data: Vec<f64>,
}

impl Sample {
    pub fn new(n_terms: usize) -> Self {
        Sample {
            n_terms,
            data: Vec::new(),
        }
    }

    pub fn push(&mut self, row: &[f64]) {
        debug_assert_eq!(row.len(), self.n_terms);
        self.data.extend_from_slice(row);
    }

    fn append(&mut self, other: Sample) {
        self.data.extend(other.data);
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.n_terms.max(1)
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn n_terms(&self) -> usize {
        self.n_terms
    }

    pub fn row(&self, k: usize) -> &[f64] {
        &self.data[k * self.n_terms..(k + 1) * self.n_terms]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.n_terms)
    }

    pub fn column(&self, c: usize) -> Vec<f64> {
        self.rows().map(|r| r[c]).collect()
    }

    pub fn mean(&self) -> Vec<f64> {
        let mut mean = vec![0.0; self.n_terms];
        for r in self.rows() {
            for (m, v) in mean.iter_mut().zip(r) {
                *m += v;
            }
        }
        let m = self.len() as f64;
        mean.iter_mut().for_each(|v| *v /= m);
        mean
    }

    /// Covariance with an `m - 1` denominator, row-major `p × p`.
    pub fn covariance(&self) -> Vec<f64> {
        let p = self.n_terms;
        let mean = self.mean();
        let mut cov = vec![0.0; p * p];
        for r in self.rows() {
            for a in 0..p {
                let da = r[a] - mean[a];
                for b in a..p {
                    cov[a * p + b] += da * (r[b] - mean[b]);
                }
            }
        }
        let denom = (self.len() as f64 - 1.0).max(1.0);
        for a in 0..p {
            for b in a..p {
                cov[a * p + b] /= denom;
                cov[b * p + a] = cov[a * p + b];
            }
        }
        cov
    }

    pub fn variances(&self) -> Vec<f64> {
        let p = self.n_terms;
        let cov = self.covariance();
        (0..p).map(|a| cov[a * p + a]).collect()
    }
}

/// Converts a parameter on the scaled statistics into one on raw statistics.
pub fn raw_theta(model: &Model, theta: &[f64]) -> Result<Vec<f64>> {
    if theta.len() != model.n_terms() {
        return Err(Error::Usage(format!(
            "theta has {} entries, model has {} terms",
            theta.len(),
            model.n_terms()
        )));
    }
    if let Some(k) = theta.iter().position(|t| !t.is_finite()) {
        return Err(Error::Numerical(format!(
            "theta[{k}] = {} for term '{}'",
            theta[k],
            model.spec().terms()[k].label
        )));
    }
    Ok(theta
        .iter()
        .zip(model.spec().terms())
        .map(|(t, term)| t / term.scale)
        .collect())
}

/// A single Metropolis–Hastings chain with incrementally tracked statistics.
#[derive(Debug, Clone)]
pub struct Chain {
    net: Network,
    stats: Vec<f64>,
    delta: Vec<f64>,
    rng: ChaCha8Rng,
    attempts: u64,
    accepted: u64,
}

impl Chain {
    pub fn new(model: &Model, net: Network, seed: u64, stream: u64) -> Result<Self> {
        if net.n_nodes() < 2 {
            return Err(Error::Usage("sampling needs at least two nodes".into()));
        }
        let stats = model.stats(&net)?;
        Ok(Chain {
            delta: vec![0.0; stats.len()],
            net,
            stats,
            rng: rng_for(seed, stream),
            attempts: 0,
            accepted: 0,
        })
    }

    pub fn network(&self) -> &Network {
        &self.net
    }

    /// Raw statistics of the current network, maintained from change statistics.
    pub fn raw_stats(&self) -> &[f64] {
        &self.stats
    }

    pub fn acceptance_rate(&self) -> f64 {
        if self.attempts == 0 {
            0.0
        } else {
            self.accepted as f64 / self.attempts as f64
        }
    }

    /// Performs `attempts` toggle proposals at raw parameter `theta_raw`.
    pub fn advance(&mut self, model: &Model, theta_raw: &[f64], attempts: usize) -> Result<()> {
        let n = self.net.n_nodes();
        for _ in 0..attempts {
            let i = self.rng.gen_range(0..n);
            let mut j = self.rng.gen_range(0..n - 1);
            if j >= i {
                j += 1;
            }
            model.change_into(&self.net, i, j, &mut self.delta);
            let present = self.net.has_edge(i, j);
            let dot: f64 = theta_raw.iter().zip(&self.delta).map(|(t, d)| t * d).sum();
            let log_ratio = if present { -dot } else { dot };
            if log_ratio.is_nan() {
                return Err(Error::Numerical(format!(
                    "acceptance exponent is NaN at theta {theta_raw:?}"
                )));
            }
            self.attempts += 1;
            if log_ratio >= 0.0 || self.rng.gen::<f64>() < log_ratio.exp() {
                self.net.toggle_unchecked(i, j);
                let sign = if present { -1.0 } else { 1.0 };
                for (s, d) in self.stats.iter_mut().zip(&self.delta) {
                    *s += sign * d;
                }
                self.accepted += 1;
            }
        }
        Ok(())
    }

    /// Runs `burn_in` attempts, then records `m` scaled statistic vectors
    /// `thin` attempts apart. `theta` is on the scaled statistics.
    pub fn draw(
        &mut self,
        model: &Model,
        theta: &[f64],
        burn_in: usize,
        thin: usize,
        m: usize,
        mut networks: Option<&mut Vec<Network>>,
    ) -> Result<Sample> {
        let theta_raw = raw_theta(model, theta)?;
        let scales = model.scales();
        self.advance(model, &theta_raw, burn_in)?;
        let mut sample = Sample::new(model.n_terms());
        let mut row = vec![0.0; model.n_terms()];
        for _ in 0..m {
            self.advance(model, &theta_raw, thin)?;
            for ((r, s), sc) in row.iter_mut().zip(&self.stats).zip(&scales) {
                *r = s / sc;
            }
            sample.push(&row);
            if let Some(nets) = networks.as_deref_mut() {
                nets.push(self.net.clone());
            }
        }
        Ok(sample)
    }
}

fn initial_network(net0: &Network, init: ChainInit, seed: u64, chain: u64) -> Network {
    match init {
        ChainInit::Observed => net0.clone(),
        ChainInit::Empty => Network::with_labels(net0.labels().to_vec()),
        ChainInit::ErDensity => {
            let mut net = er_draw(net0.n_nodes(), net0.density(), seed ^ 0x5eed_0e4d, chain);
            net = relabel(net, net0.labels());
            net
        }
    }
}

fn relabel(net: Network, labels: &[String]) -> Network {
    let mut out = Network::with_labels(labels.to_vec());
    for (i, j) in net.edges() {
        out.add_edge(i, j).expect("same node count");
    }
    out
}

/// Splits `m` draws over `chains` chains; earlier chains take the remainder.
pub(crate) fn split_draws(m: usize, chains: usize) -> Vec<usize> {
    (0..chains)
        .map(|c| m / chains + usize::from(c < m % chains))
        .collect()
}

/// Draws `cfg.m` scaled statistic vectors from the model at `theta`.
pub fn sample(model: &Model, theta: &[f64], net0: &Network, cfg: &SamplerConfig) -> Result<Sample> {
    Ok(sample_impl(model, theta, net0, cfg, false)?.0)
}

/// Like [`sample`], also returning the retained networks.
pub fn sample_networks(
    model: &Model,
    theta: &[f64],
    net0: &Network,
    cfg: &SamplerConfig,
) -> Result<(Sample, Vec<Network>)> {
    sample_impl(model, theta, net0, cfg, true)
}

fn sample_impl(
    model: &Model,
    theta: &[f64],
    net0: &Network,
    cfg: &SamplerConfig,
    keep: bool,
) -> Result<(Sample, Vec<Network>)> {
    cfg.validate()?;
    let per_chain = split_draws(cfg.m, cfg.chains);
    let parts: Vec<(Sample, Vec<Network>)> = per_chain
        .par_iter()
        .enumerate()
        .map(|(c, &m)| {
            let start = initial_network(net0, cfg.init, cfg.seed, c as u64);
            let mut chain = Chain::new(model, start, cfg.seed, c as u64)?;
            let mut nets = Vec::new();
            let s = chain.draw(
                model,
                theta,
                cfg.burn_in,
                cfg.thin,
                m,
                if keep { Some(&mut nets) } else { None },
            )?;
            Ok((s, nets))
        })
        .collect::<Result<_>>()?;
    let mut sample = Sample::new(model.n_terms());
    let mut nets = Vec::new();
    for (s, n) in parts {
        sample.append(s);
        nets.extend(n);
    }
    Ok((sample, nets))
}

/// One Erdős–Rényi network from stream `stream` of `seed`.
pub fn er_draw(n: usize, p: f64, seed: u64, stream: u64) -> Network {
    let mut rng = rng_for(seed, stream);
    let mut net = Network::empty(n);
    for i in 0..n {
        for j in (i + 1)..n {
            if rng.gen::<f64>() < p {
                net.toggle_unchecked(i, j);
            }
        }
    }
    net
}

/// `m` independent Erdős–Rényi networks with tie probability `p`.
pub fn sample_er(n: usize, p: f64, m: usize, seed: u64) -> Result<Vec<Network>> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Usage(format!("tie probability {p} outside [0, 1]")));
    }
    Ok((0..m)
        .into_par_iter()
        .map(|k| er_draw(n, p, seed, k as u64))
        .collect())
}

/// Writes draws as `draw_00000.edges`, ... into `dir`.
pub fn write_draws(dir: &Path, nets: &[Network]) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let width = nets.len().saturating_sub(1).to_string().len().max(5);
    for (k, net) in nets.iter().enumerate() {
        let path = dir.join(format!("draw_{k:0width$}.edges"));
        io::write_edge_list(&path, net)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::AttributeTable;
    use crate::statistics::{ModelSpec, TermKind};

    fn edges_model(n: usize) -> Model {
        Model::new(&ModelSpec::from_kinds([]).unwrap(), &AttributeTable::new(n), n).unwrap()
    }

    #[test]
    fn er_extremes() {
        assert!(sample_er(8, 0.0, 5, 1).unwrap().iter().all(|g| g.edge_count() == 0));
        assert!(sample_er(8, 1.0, 5, 1).unwrap().iter().all(|g| g.edge_count() == 28));
        assert!(sample_er(8, 1.5, 5, 1).is_err());
    }

    #[test]
    fn er_mean_edge_count() {
        let nets = sample_er(50, 0.2, 2000, 11).unwrap();
        let mean = nets.iter().map(|g| g.edge_count() as f64).sum::<f64>() / 2000.0;
        // Binomial(1225, 0.2): sd 14, standard error of the mean 0.31.
        assert!((mean - 245.0).abs() < 4.0 * 14.0 / 2000f64.sqrt(), "mean {mean}");
    }

    #[test]
    fn edges_only_zero_theta_half_density() {
        let n = 20;
        let model = edges_model(n);
        let cfg = SamplerConfig::for_nodes(n, 400, 5);
        let s = sample(&model, &[0.0], &Network::empty(n), &cfg).unwrap();
        let mean = s.mean()[0];
        // 190 dyads at p = 1/2: sd 6.9, draws one sweep apart are nearly independent.
        assert!((mean - 95.0).abs() < 2.0, "mean {mean}");
    }

    #[test]
    fn edges_only_setup3_density() {
        let n = 30;
        let model = edges_model(n);
        let cfg = SamplerConfig::for_nodes(n, 400, 8);
        let s = sample(&model, &[-1.5], &Network::empty(n), &cfg).unwrap();
        let p = (-1.5f64).exp() / (1.0 + (-1.5f64).exp());
        assert!((p - 0.1824).abs() < 1e-4);
        let density = s.mean()[0] / 435.0;
        assert!((density - p).abs() < 0.01, "density {density}");
    }

    #[test]
    fn incremental_stats_match_recompute() {
        let n = 25;
        let spec = ModelSpec::from_kinds([
            TermKind::Gwesp { alpha: 0.5 },
            TermKind::Gwnsp { alpha: 0.7 },
            TermKind::Gwdegree { alpha: 0.3 },
        ])
        .unwrap();
        let model = Model::new(&spec, &AttributeTable::new(n), n).unwrap();
        let mut chain = Chain::new(&model, er_draw(n, 0.2, 1, 0), 4, 0).unwrap();
        chain.advance(&model, &[-1.0, 0.3, -0.2, 0.4], 200_000).unwrap();
        let fresh = model.stats(chain.network()).unwrap();
        assert_eq!(chain.raw_stats()[0], fresh[0]);
        for (a, b) in chain.raw_stats().iter().zip(&fresh).skip(1) {
            assert!((a - b).abs() < 1e-6, "{a} vs {b}");
        }
        assert!(chain.acceptance_rate() > 0.0);
    }

    #[test]
    fn deterministic_given_seed() {
        let n = 12;
        let model = edges_model(n);
        let mut cfg = SamplerConfig::for_nodes(n, 50, 99);
        cfg.chains = 3;
        let a = sample(&model, &[-0.5], &Network::empty(n), &cfg).unwrap();
        let b = sample(&model, &[-0.5], &Network::empty(n), &cfg).unwrap();
        assert_eq!(a, b);
        cfg.seed = 100;
        assert_ne!(a, sample(&model, &[-0.5], &Network::empty(n), &cfg).unwrap());
    }

    #[test]
    fn rejects_bad_theta() {
        let model = edges_model(5);
        let cfg = SamplerConfig::for_nodes(5, 3, 1);
        let err = sample(&model, &[f64::NAN], &Network::empty(5), &cfg).unwrap_err();
        assert!(matches!(err, Error::Numerical(_)));
        assert!(sample(&model, &[0.0, 1.0], &Network::empty(5), &cfg).is_err());
    }

    #[test]
    fn split_draws_sums() {
        assert_eq!(split_draws(10, 3), vec![4, 3, 3]);
        assert_eq!(split_draws(2, 4), vec![1, 1, 0, 0]);
    }
}
