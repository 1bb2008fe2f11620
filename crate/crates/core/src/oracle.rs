//! Exact ERGM computations by enumerating every graph on at most 7 nodes.
//!
//! All quantities are on the scaled statistics of the bound spec, matching
//! the parameterization used by the estimator.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::graph::{dyad_count, AttributeTable, Network};
use crate::statistics::{Model, ModelSpec};

/// Largest node count the oracle accepts (2^21 graphs).
pub const MAX_NODES: usize = 7;

/// Divergence bound on |theta| for the exact solvers.
const THETA_BOUND: f64 = 60.0;

/// Every graph on `n` nodes with its scaled statistic vector.
#[derive(Debug, Clone)]
pub struct ExactModel {
    model: Model,
    n_terms: usize,
    /// Row `k` holds the scaled statistics of the graph with dyad bitmask `k`.
    stats: Vec<f64>,
}

/// Exact mean and covariance of the scaled statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactMoments {
    pub log_kappa: f64,
    pub mean: Vec<f64>,
    /// Row-major `p × p`.
    pub covariance: Vec<f64>,
}

impl ExactMoments {
    pub fn cov(&self, a: usize, b: usize) -> f64 {
        self.covariance[a * self.mean.len() + b]
    }
}

impl ExactModel {
    pub fn new(spec: &ModelSpec, attrs: &AttributeTable, n: usize) -> Result<Self> {
        if n > MAX_NODES {
            return Err(Error::Capacity(format!(
                "exact enumeration supports at most {MAX_NODES} nodes, got {n}"
            )));
        }
        if n < 2 {
            return Err(Error::Usage("exact enumeration needs at least two nodes".into()));
        }
        let model = Model::new(spec, attrs, n)?;
        let p = model.n_terms();
        let graphs = 1u64 << dyad_count(n);
        let mut stats = Vec::with_capacity(graphs as usize * p);
        for mask in 0..graphs {
            stats.extend(model.scaled_stats(&Network::from_mask(n, mask))?);
        }
        Ok(ExactModel {
            model,
            n_terms: p,
            stats,
        })
    }

    pub fn model(&self) -> &Model {
        &self.model
    }

    pub fn spec(&self) -> &ModelSpec {
        self.model.spec()
    }

    pub fn n_terms(&self) -> usize {
        self.n_terms
    }

    pub fn n_graphs(&self) -> usize {
        self.stats.len() / self.n_terms
    }

    /// Scaled statistics of the graph with dyad bitmask `mask`.
    pub fn row(&self, mask: usize) -> &[f64] {
        &self.stats[mask * self.n_terms..(mask + 1) * self.n_terms]
    }

    fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.stats.chunks_exact(self.n_terms)
    }

    fn check_theta(&self, theta: &[f64]) -> Result<()> {
        if theta.len() != self.n_terms {
            return Err(Error::Usage(format!(
                "theta has {} entries, model has {} terms",
                theta.len(),
                self.n_terms
            )));
        }
        if theta.iter().any(|t| !t.is_finite()) {
            return Err(Error::Numerical(format!("non-finite theta {theta:?}")));
        }
        Ok(())
    }

    fn log_weights(&self, theta: &[f64]) -> Vec<f64> {
        self.rows()
            .map(|r| r.iter().zip(theta).map(|(s, t)| s * t).sum())
            .collect()
    }

    /// `log Σ_y exp(s(y)·θ)` with a max shift.
    pub fn log_kappa(&self, theta: &[f64]) -> Result<f64> {
        self.check_theta(theta)?;
        Ok(log_sum_exp(&self.log_weights(theta)))
    }

    /// Log-probability of each graph, indexed by bitmask.
    pub fn log_probabilities(&self, theta: &[f64]) -> Result<Vec<f64>> {
        self.check_theta(theta)?;
        let lw = self.log_weights(theta);
        let lk = log_sum_exp(&lw);
        Ok(lw.into_iter().map(|l| l - lk).collect())
    }

    /// Exact `E_θ[s(Y)]` and `Cov_θ(s(Y))`.
    pub fn moments(&self, theta: &[f64]) -> Result<ExactMoments> {
        self.check_theta(theta)?;
        let p = self.n_terms;
        let lw = self.log_weights(theta);
        let lk = log_sum_exp(&lw);
        let mut mean = vec![0.0; p];
        for (r, l) in self.rows().zip(&lw) {
            let w = (l - lk).exp();
            for (m, s) in mean.iter_mut().zip(r) {
                *m += w * s;
            }
        }
        let mut cov = vec![0.0; p * p];
        for (r, l) in self.rows().zip(&lw) {
            let w = (l - lk).exp();
            for a in 0..p {
                let da = r[a] - mean[a];
                for b in a..p {
                    cov[a * p + b] += w * da * (r[b] - mean[b]);
                }
            }
        }
        for a in 0..p {
            for b in 0..a {
                cov[a * p + b] = cov[b * p + a];
            }
        }
        Ok(ExactMoments {
            log_kappa: lk,
            mean,
            covariance: cov,
        })
    }

    /// Log-likelihood `s_obs·θ − log κ(θ)`.
    pub fn log_likelihood(&self, observed: &[f64], theta: &[f64]) -> Result<f64> {
        Ok(dot(observed, theta) - self.log_kappa(theta)?)
    }

    fn edges_start(&self, observed: &[f64]) -> Result<Vec<f64>> {
        let d = self.model.n_nodes() * (self.model.n_nodes() - 1) / 2;
        let density = observed[0] / d as f64;
        if !(density > 0.0 && density < 1.0) {
            return Err(Error::Degenerate(format!(
                "observed density {density} is on the boundary; the MLE does not exist"
            )));
        }
        let mut theta = vec![0.0; self.n_terms];
        theta[0] = (density / (1.0 - density)).ln();
        Ok(theta)
    }

    /// Exact maximum likelihood estimate by damped Newton–Raphson.
    pub fn mle(&self, observed: &[f64]) -> Result<Vec<f64>> {
        self.penalized(observed, 0.0)
    }

    /// Maximizer of `s_obs·θ − log κ(θ) − λ Σ_{penalized j} |θ_j|`.
    ///
    /// Cyclic coordinate ascent where each coordinate first tests the zero
    /// candidate and otherwise solves its one-dimensional stationarity
    /// condition, followed by a Newton polish on the active set.
    pub fn penalized(&self, observed: &[f64], lambda: f64) -> Result<Vec<f64>> {
        if observed.len() != self.n_terms {
            return Err(Error::Usage("observed statistics do not match the model".into()));
        }
        if !(lambda >= 0.0) {
            return Err(Error::Usage(format!("lambda must be non-negative, got {lambda}")));
        }
        let penalized = self.spec().penalized();
        let mut theta = self.edges_start(observed)?;
        let p = self.n_terms;

        if lambda == 0.0 || penalized.iter().all(|&x| !x) {
            theta = self.newton(observed, theta, &vec![true; p], lambda, &penalized)?;
        } else {
            for _sweep in 0..20_000 {
                let mut max_change: f64 = 0.0;
                for j in 0..p {
                    let old = theta[j];
                    theta[j] = self.coordinate_optimum(observed, &theta, j, lambda, penalized[j])?;
                    max_change = max_change.max((theta[j] - old).abs());
                }
                if max_change < 1e-11 {
                    break;
                }
            }
            let active: Vec<bool> = (0..p).map(|j| !penalized[j] || theta[j] != 0.0).collect();
            if let Ok(polished) = self.newton(observed, theta.clone(), &active, lambda, &penalized) {
                let signs_kept = (0..p)
                    .all(|j| !active[j] || !penalized[j] || polished[j].signum() == theta[j].signum());
                let m = self.moments(&polished)?;
                let kkt = (0..p).all(|j| active[j] || (observed[j] - m.mean[j]).abs() <= lambda + 1e-9);
                if signs_kept && kkt {
                    theta = polished;
                }
            }
        }
        self.check_degenerate(&theta)?;
        Ok(theta)
    }

    fn check_degenerate(&self, theta: &[f64]) -> Result<()> {
        if theta.iter().any(|t| t.abs() > THETA_BOUND) {
            return Err(Error::Degenerate(format!("estimate diverges: {theta:?}")));
        }
        let p = self.n_terms;
        let m = self.moments(theta)?;
        let cov = DMatrix::from_row_slice(p, p, &m.covariance);
        let eig = cov.symmetric_eigen().eigenvalues;
        let max = eig.max();
        if !(eig.min() > 1e-8 * max) {
            return Err(Error::Degenerate(
                "observed statistics lie on the boundary of the attainable set".into(),
            ));
        }
        Ok(())
    }

    /// Newton iterations on the coordinates flagged in `active` (others held).
    fn newton(
        &self,
        observed: &[f64],
        mut theta: Vec<f64>,
        active: &[bool],
        lambda: f64,
        penalized: &[bool],
    ) -> Result<Vec<f64>> {
        let idx: Vec<usize> = (0..self.n_terms).filter(|&j| active[j]).collect();
        let q = idx.len();
        let sign: Vec<f64> = theta.iter().map(|t| t.signum()).collect();
        let objective = |th: &[f64]| -> Result<f64> {
            let pen: f64 = idx
                .iter()
                .filter(|&&j| penalized[j])
                .map(|&j| lambda * sign[j] * th[j])
                .sum();
            Ok(self.log_likelihood(observed, th)? - pen)
        };
        let mut value = objective(&theta)?;
        for _ in 0..200 {
            let m = self.moments(&theta)?;
            let g = DVector::from_iterator(
                q,
                idx.iter().map(|&j| {
                    observed[j] - m.mean[j] - if penalized[j] { lambda * sign[j] } else { 0.0 }
                }),
            );
            if g.amax() < 1e-11 {
                return Ok(theta);
            }
            let h = DMatrix::from_fn(q, q, |a, b| m.cov(idx[a], idx[b]));
            let step = h
                .cholesky()
                .ok_or_else(|| Error::Degenerate("singular information matrix".into()))?
                .solve(&g);
            let mut t = 1.0;
            loop {
                let mut cand = theta.clone();
                for (a, &j) in idx.iter().enumerate() {
                    cand[j] += t * step[a];
                }
                if cand.iter().any(|x| x.abs() > THETA_BOUND) {
                    return Err(Error::Degenerate(format!("estimate diverges: {cand:?}")));
                }
                let v = objective(&cand)?;
                if v >= value - 1e-12 * value.abs().max(1.0) {
                    theta = cand;
                    value = v;
                    break;
                }
                t *= 0.5;
                if t < 1e-10 {
                    return Ok(theta);
                }
            }
        }
        Err(Error::NonConvergence { iterations: 200 })
    }

    /// Optimal value of coordinate `j` with the others held fixed.
    fn coordinate_optimum(
        &self,
        observed: &[f64],
        theta: &[f64],
        j: usize,
        lambda: f64,
        penalized: bool,
    ) -> Result<f64> {
        let base: Vec<f64> = self
            .rows()
            .map(|r| {
                r.iter()
                    .zip(theta)
                    .enumerate()
                    .filter(|(k, _)| *k != j)
                    .map(|(_, (s, t))| s * t)
                    .sum()
            })
            .collect();
        let col: Vec<f64> = self.rows().map(|r| r[j]).collect();
        // Score and information of coordinate j at value t.
        let score = |t: f64| -> (f64, f64) {
            let lw: Vec<f64> = base.iter().zip(&col).map(|(b, s)| b + t * s).collect();
            let lk = log_sum_exp(&lw);
            let (mut m1, mut m2) = (0.0, 0.0);
            for (l, s) in lw.iter().zip(&col) {
                let w = (l - lk).exp();
                m1 += w * s;
                m2 += w * s * s;
            }
            (observed[j] - m1, (m2 - m1 * m1).max(0.0))
        };
        let target = if penalized {
            let (g0, _) = score(0.0);
            if g0.abs() <= lambda {
                return Ok(0.0);
            }
            // Solve score(t) = λ·sign(t) on the side the score points to.
            let s = g0.signum();
            return solve_monotone(|t| {
                let (g, h) = score(t);
                (g - lambda * s, h)
            }, 0.0, s);
        } else {
            theta[j]
        };
        let (g, _) = score(target);
        solve_monotone(score, target, g.signum())
    }
}

/// Root of a decreasing function `f` (given with its negated derivative),
/// searching from `start` in direction `dir`.
fn solve_monotone(f: impl Fn(f64) -> (f64, f64), start: f64, dir: f64) -> Result<f64> {
    let (f0, _) = f(start);
    if f0 == 0.0 || dir == 0.0 {
        return Ok(start);
    }
    // Bracket [lo, hi] with f(lo) > 0 > f(hi).
    let mut step = 0.5;
    let (mut lo, mut hi);
    if f0 > 0.0 {
        lo = start;
        loop {
            let x = start + step;
            if x.abs() > THETA_BOUND {
                return Err(Error::Degenerate("coordinate optimum diverges".into()));
            }
            if f(x).0 <= 0.0 {
                hi = x;
                break;
            }
            lo = x;
            step *= 2.0;
        }
    } else {
        hi = start;
        loop {
            let x = start - step;
            if x.abs() > THETA_BOUND {
                return Err(Error::Degenerate("coordinate optimum diverges".into()));
            }
            if f(x).0 >= 0.0 {
                lo = x;
                break;
            }
            hi = x;
            step *= 2.0;
        }
    }
    // Safeguarded Newton.
    let mut x = 0.5 * (lo + hi);
    for _ in 0..200 {
        let (fx, h) = f(x);
        if fx > 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        if fx == 0.0 || (hi - lo).abs() < 1e-15 * (1.0 + x.abs()) {
            return Ok(x);
        }
        let newton = if h > 0.0 { x + fx / h } else { f64::NAN };
        let next = if newton > lo.min(hi) && newton < lo.max(hi) {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if (next - x).abs() < 1e-15 * (1.0 + x.abs()) {
            return Ok(next);
        }
        x = next;
    }
    Ok(x)
}

pub(crate) fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    max + xs.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl ExactModel {
    /// Smallest λ at which every penalized coordinate is zero: the largest
    /// absolute score of a penalized term at the edges-only optimum.
    pub fn lambda_max(&self, observed: &[f64]) -> Result<f64> {
        let theta = self.edges_start(observed)?;
        let m = self.moments(&theta)?;
        Ok(self
            .spec()
            .penalized()
            .iter()
            .enumerate()
            .filter(|(_, &p)| p)
            .map(|(j, _)| (observed[j] - m.mean[j]).abs())
            .fold(0.0, f64::max))
    }

    /// Largest λ at which coordinate `j` of the penalized optimum is nonzero,
    /// by bisection on `[0, lambda_max]`. `None` if it is zero even at λ = 0.
    pub fn activation_lambda(&self, observed: &[f64], j: usize) -> Result<Option<f64>> {
        let mut hi = self.lambda_max(observed)?;
        let mut lo = 0.0;
        if self.penalized(observed, lo)?[j] == 0.0 {
            return Ok(None);
        }
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if self.penalized(observed, mid)?[j] != 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo < 1e-10 * hi.max(1e-12) {
                break;
            }
        }
        Ok(Some(0.5 * (lo + hi)))
    }
}
