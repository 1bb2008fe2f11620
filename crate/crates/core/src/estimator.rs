//! Simulation-based stochastic gradient MLE and its L1-penalized variant.
//!
//! Each iteration estimates `Δ_t = s(y_obs) − E_θ[s(Y)]` from a sample drawn
//! at the current parameter and takes the step
//! `θ ← θ + η_t · P (Δ_t − λ·sign(θ))` with `η_t = η_0 / √(t+1)`, where `P` is a
//! fixed preconditioner estimated once at the starting point.
//!
//! Penalized coordinates use a truncated-subgradient rule so they can sit at
//! exactly zero: a step that would cross zero stops at zero, and a coordinate
//! at zero only leaves it when its gradient exceeds the penalty.

use std::path::Path;

use crate::error::{Error, Result};
use crate::graph::{dyad_count, Network};
use crate::io::{fmt_f64, write_table};
use crate::oracle::ExactModel;
use crate::sampler::{split_draws, Chain, Sample};
use crate::statistics::Model;

/// How the update direction is scaled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preconditioner {
    /// One learning rate for all coordinates, `η_0 = 0.25 / max_j sd_j`.
    Scalar,
    /// Per-coordinate rate `η_0 / Var_j`.
    Diagonal,
    /// The edges coordinate absorbs the linear effect of every other term on
    /// the edge count (regression slopes at the start), and each term gets
    /// rate `η_0` over its variance net of edges. Penalties and zero tests act
    /// on the original coordinates.
    EdgesResidual,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SgdConfig {
    /// Base learning rate; `None` picks the preconditioner's default.
    pub eta0: Option<f64>,
    pub max_iters: usize,
    /// Draws per iteration.
    pub m_per_iter: usize,
    /// Convergence window (also the tail-averaging window).
    pub window: usize,
    /// Threshold on the window-averaged `‖θ_{t+1} − θ_t‖∞`.
    pub tol: f64,
    pub seed: u64,
    pub preconditioner: Preconditioner,
    /// Burn-in of the first iteration; `None` means 20 sweeps.
    pub burn_in: Option<usize>,
    /// Burn-in of later iterations on the warm chains; `None` means one sweep.
    pub warm_burn_in: Option<usize>,
    /// Attempts between retained draws; `None` means one sweep.
    pub thin: Option<usize>,
    pub chains: usize,
    /// Abort when `‖θ‖∞` exceeds this.
    pub theta_bound: f64,
    /// Cap on `‖θ_{t+1} − θ_t‖∞`; larger steps are shortened.
    pub max_step: f64,
}

impl Default for SgdConfig {
    fn default() -> Self {
        SgdConfig {
            eta0: None,
            max_iters: 2000,
            m_per_iter: 100,
            window: 25,
            tol: 0.01,
            seed: 20_240_601,
            preconditioner: Preconditioner::EdgesResidual,
            burn_in: None,
            warm_burn_in: None,
            thin: None,
            chains: 1,
            theta_bound: 50.0,
            max_step: 1.0,
        }
    }
}

impl SgdConfig {
    fn validate(&self) -> Result<()> {
        if self.window == 0 || !(self.tol > 0.0) || !(self.max_step > 0.0) || self.m_per_iter == 0 || self.chains == 0 {
            return Err(Error::Usage(
                "SGD needs window >= 1, tol > 0, m_per_iter >= 1 and chains >= 1".into(),
            ));
        }
        if let Some(e) = self.eta0 {
            if !(e > 0.0 && e.is_finite()) {
                return Err(Error::Usage(format!("eta0 must be positive, got {e}")));
            }
        }
        Ok(())
    }
}

/// Moments of the scaled statistics at a parameter value.
#[derive(Debug, Clone)]
pub struct Moments {
    pub mean: Vec<f64>,
    /// Row-major covariance.
    pub covariance: Vec<f64>,
    /// Mean acceptance rate of the chains (1 for exact moments).
    pub acceptance: f64,
}

/// Supplies `E_θ[s(Y)]` to the optimizer.
pub trait MomentSource {
    fn moments(&mut self, theta: &[f64]) -> Result<Moments>;
}

/// Moments estimated from warm Metropolis–Hastings chains.
///
/// The chains persist between calls: the first call burns in from the
/// starting network, later calls continue from where the chains stopped.
pub struct McmcMoments<'a> {
    model: &'a Model,
    chains: Vec<Chain>,
    draws: Vec<usize>,
    burn_in: usize,
    warm_burn_in: usize,
    thin: usize,
    started: bool,
}

impl<'a> McmcMoments<'a> {
    pub fn new(model: &'a Model, start: &Network, cfg: &SgdConfig) -> Result<Self> {
        let d = dyad_count(start.n_nodes()).max(1);
        let chains = (0..cfg.chains)
            .map(|c| Chain::new(model, start.clone(), cfg.seed, c as u64))
            .collect::<Result<Vec<_>>>()?;
        Ok(McmcMoments {
            model,
            chains,
            draws: split_draws(cfg.m_per_iter, cfg.chains),
            burn_in: cfg.burn_in.unwrap_or(20 * d),
            warm_burn_in: cfg.warm_burn_in.unwrap_or(d),
            thin: cfg.thin.unwrap_or(d).max(1),
            started: false,
        })
    }

    /// Draws `m` statistic vectors at `theta` from the warm chains.
    pub fn sample(&mut self, theta: &[f64], m: usize) -> Result<Sample> {
        let burn = if self.started {
            self.warm_burn_in
        } else {
            self.burn_in
        };
        self.started = true;
        let per_chain = split_draws(m, self.chains.len());
        let model = self.model;
        let thin = self.thin;
        let parts = {
            use rayon::prelude::*;
            self.chains
                .par_iter_mut()
                .zip(per_chain)
                .map(|(c, k)| c.draw(model, theta, burn, thin, k, None))
                .collect::<Result<Vec<_>>>()?
        };
        let mut sample = Sample::new(model.n_terms());
        for s in parts {
            for r in s.rows() {
                sample.push(r);
            }
        }
        Ok(sample)
    }

    pub fn acceptance(&self) -> f64 {
        self.chains.iter().map(Chain::acceptance_rate).sum::<f64>() / self.chains.len() as f64
    }
}

impl MomentSource for McmcMoments<'_> {
    fn moments(&mut self, theta: &[f64]) -> Result<Moments> {
        let m = self.draws.iter().sum();
        let sample = self.sample(theta, m)?;
        Ok(Moments {
            mean: sample.mean(),
            covariance: sample.covariance(),
            acceptance: self.acceptance(),
        })
    }
}

/// Exact moments by enumeration; lets the optimizer be tested without
/// sampling noise.
pub struct ExactMoments<'a> {
    em: &'a ExactModel,
}

impl<'a> ExactMoments<'a> {
    pub fn new(em: &'a ExactModel) -> Self {
        ExactMoments { em }
    }
}

impl MomentSource for ExactMoments<'_> {
    fn moments(&mut self, theta: &[f64]) -> Result<Moments> {
        let m = self.em.moments(theta)?;
        Ok(Moments {
            mean: m.mean,
            covariance: m.covariance,
            acceptance: 1.0,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub iteration: usize,
    pub eta: f64,
    /// Parameter after this iteration's update.
    pub theta: Vec<f64>,
    /// `‖Δ_t‖∞` before the update.
    pub delta_norm: f64,
    pub acceptance: f64,
}

/// Per-iteration history of a fit.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FitTrace {
    pub records: Vec<TraceRecord>,
}

impl FitTrace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// CSV with columns `iteration,eta,<labels…>,delta_inf,acceptance`.
    pub fn write_csv(&self, path: &Path, labels: &[String]) -> Result<()> {
        let mut header = vec!["iteration".to_string(), "eta".to_string()];
        header.extend(labels.iter().cloned());
        header.push("delta_inf".into());
        header.push("acceptance".into());
        let rows: Vec<Vec<String>> = self
            .records
            .iter()
            .map(|r| {
                let mut row = vec![r.iteration.to_string(), fmt_f64(r.eta)];
                row.extend(r.theta.iter().map(|&t| fmt_f64(t)));
                row.push(fmt_f64(r.delta_norm));
                row.push(fmt_f64(r.acceptance));
                row
            })
            .collect();
        write_table(path, &header, &rows)
    }
}

/// Result of one (penalized) fit.
#[derive(Debug, Clone, PartialEq)]
pub struct Fit {
    /// Estimate on the scaled statistics.
    pub theta: Vec<f64>,
    pub lambda: f64,
    pub converged: bool,
    pub iterations: usize,
    pub trace: FitTrace,
}

impl Fit {
    /// Estimate on the raw statistics (`θ_j / scale_j`).
    pub fn raw_theta(&self, scales: &[f64]) -> Vec<f64> {
        self.theta.iter().zip(scales).map(|(t, s)| t / s).collect()
    }
}

/// Fixed linear preconditioner: `φ_0 = θ_0 + Σ b_j θ_j`, `φ_j = θ_j`, with
/// per-coordinate rates on `φ`.
#[derive(Debug, Clone)]
struct Precond {
    slopes: Vec<f64>,
    rates: Vec<f64>,
    /// The base rate `η_0` in effect.
    base: f64,
}

impl Precond {
    fn build(kind: Preconditioner, eta0: Option<f64>, cov: &[f64], p: usize) -> Result<Self> {
        let var: Vec<f64> = (0..p).map(|j| cov[j * p + j]).collect();
        if let Some(j) = (0..p).find(|&j| !(var[j] > 0.0)) {
            return Err(Error::Degenerate(format!(
                "statistic {j} does not vary at the starting parameter; increase the sample size"
            )));
        }
        let mut slopes = vec![0.0; p];
        let base = match (kind, eta0) {
            (_, Some(e)) => e,
            (Preconditioner::Scalar, None) => 0.25 / var.iter().map(|v| v.sqrt()).fold(0.0, f64::max),
            (_, None) => 0.5,
        };
        let rates = match kind {
            Preconditioner::Scalar => vec![base; p],
            Preconditioner::Diagonal => var.iter().map(|v| base / v).collect(),
            Preconditioner::EdgesResidual => {
                let mut rates = vec![base / var[0]; p];
                for j in 1..p {
                    slopes[j] = cov[j] / var[0];
                    let resid = var[j] - cov[j] * cov[j] / var[0];
                    // Guard against a term that is (almost) a multiple of edges.
                    rates[j] = base / resid.max(1e-3 * var[j]);
                }
                rates
            }
        };
        Ok(Precond { slopes, rates, base })
    }
}

/// Stochastic (sub)gradient optimizer bound to one observed network.
///
/// Successive calls to [`Estimator::fit`] reuse the same moment source (so
/// MCMC chains stay warm) and the preconditioner estimated at the first start.
pub struct Estimator<'a> {
    source: Box<dyn MomentSource + 'a>,
    observed: Vec<f64>,
    penalized: Vec<bool>,
    theta0: Vec<f64>,
    cfg: SgdConfig,
    precond: Option<Precond>,
}

impl<'a> Estimator<'a> {
    /// Estimator drawing from warm chains started at the observed network.
    pub fn mcmc(model: &'a Model, observed: &Network, cfg: SgdConfig) -> Result<Self> {
        cfg.validate()?;
        let obs = model.scaled_stats(observed)?;
        let source = McmcMoments::new(model, observed, &cfg)?;
        Self::with_source(Box::new(source), obs, model.spec().penalized(), observed.density(), cfg)
    }

    /// Estimator using exact moments from enumeration.
    pub fn exact(em: &'a ExactModel, observed: &[f64], cfg: SgdConfig) -> Result<Self> {
        cfg.validate()?;
        let n = em.model().n_nodes();
        let density = observed[0] / dyad_count(n) as f64;
        Self::with_source(
            Box::new(ExactMoments::new(em)),
            observed.to_vec(),
            em.spec().penalized(),
            density,
            cfg,
        )
    }

    /// Estimator over an arbitrary moment source.
    pub fn with_source(
        source: Box<dyn MomentSource + 'a>,
        observed: Vec<f64>,
        penalized: Vec<bool>,
        density: f64,
        cfg: SgdConfig,
    ) -> Result<Self> {
        cfg.validate()?;
        if let Some(k) = observed.iter().position(|s| !s.is_finite()) {
            return Err(Error::Numerical(format!("observed statistic {k} is not finite")));
        }
        if !(density > 0.0 && density < 1.0) {
            return Err(Error::Degenerate(format!(
                "observed density {density} is 0 or 1; the MLE does not exist"
            )));
        }
        let mut theta0 = vec![0.0; observed.len()];
        theta0[0] = (density / (1.0 - density)).ln();
        Ok(Estimator {
            source,
            observed,
            penalized,
            theta0,
            cfg,
            precond: None,
        })
    }

    /// Starting point: edges at the logit of the observed density, others 0.
    pub fn theta0(&self) -> &[f64] {
        &self.theta0
    }

    pub fn observed(&self) -> &[f64] {
        &self.observed
    }

    pub fn config(&self) -> &SgdConfig {
        &self.cfg
    }

    /// Unpenalized fit from `theta0`.
    pub fn fit_mle(&mut self) -> Result<Fit> {
        self.fit(0.0, None)
    }

    /// Fit at penalty `lambda`, starting from `start` (default `theta0`).
    pub fn fit(&mut self, lambda: f64, start: Option<&[f64]>) -> Result<Fit> {
        let weights: Vec<f64> = self
            .penalized
            .iter()
            .map(|&p| if p { lambda } else { 0.0 })
            .collect();
        let mut fit = self.fit_weighted(&weights, start)?;
        fit.lambda = lambda;
        Ok(fit)
    }

    /// Fit with an individual penalty `penalties[j]` on each coordinate.
    pub fn fit_weighted(&mut self, penalties: &[f64], start: Option<&[f64]>) -> Result<Fit> {
        let p = self.observed.len();
        if penalties.len() != p || penalties.iter().any(|l| !(*l >= 0.0)) {
            return Err(Error::Usage("penalties must be non-negative, one per term".into()));
        }
        if penalties[0] != 0.0 {
            return Err(Error::Usage("the edges coefficient cannot be penalized".into()));
        }
        let mut theta = start.unwrap_or(&self.theta0).to_vec();
        if theta.len() != p {
            return Err(Error::Usage("start vector does not match the model".into()));
        }
        let cfg = self.cfg.clone();
        let mut trace = FitTrace::default();
        let start_theta = theta.clone();
        let mut converged = false;

        for t in 0..cfg.max_iters {
            let mom = self.source.moments(&theta)?;
            if self.precond.is_none() {
                self.precond = Some(Precond::build(cfg.preconditioner, cfg.eta0, &mom.covariance, p)?);
            }
            let pc = self.precond.as_ref().expect("set above");
            let delta: Vec<f64> = self.observed.iter().zip(&mom.mean).map(|(o, m)| o - m).collect();
            let mut eta = 1.0 / ((t + 1) as f64).sqrt();

            let mut next = propose(&theta, &delta, eta, pc, penalties);
            let step = max_abs_diff(&next, &theta);
            if step > cfg.max_step {
                eta *= cfg.max_step / step;
                next = propose(&theta, &delta, eta, pc, penalties);
            }

            let norm = next.iter().fold(0.0f64, |a, x| a.max(x.abs()));
            if !norm.is_finite() || norm > cfg.theta_bound {
                return Err(Error::Degenerate(format!(
                    "‖θ‖∞ = {norm} exceeds {} at iteration {t}; the model is near-degenerate",
                    cfg.theta_bound
                )));
            }
            theta = next;
            trace.records.push(TraceRecord {
                iteration: t,
                eta: eta * pc.base,
                theta: theta.clone(),
                delta_norm: delta.iter().fold(0.0f64, |a, x| a.max(x.abs())),
                acceptance: mom.acceptance,
            });
            // Mean step over the window: ‖θ_t − θ_{t−w}‖∞ / w.
            let k = trace.len();
            if k >= cfg.window {
                let back = if k == cfg.window {
                    &start_theta
                } else {
                    &trace.records[k - cfg.window - 1].theta
                };
                if max_abs_diff(&theta, back) / (cfg.window as f64) < cfg.tol {
                    converged = true;
                    break;
                }
            }
        }

        let iterations = trace.len();
        let theta = tail_average(&trace, cfg.window, penalties);
        if !converged {
            log::warn!("fit did not converge within {} iterations", cfg.max_iters);
        }
        Ok(Fit {
            theta,
            lambda: 0.0,
            converged,
            iterations,
            trace,
        })
    }
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}

/// One preconditioned subgradient step with zero snapping.
///
/// Coordinate 0 (edges) is unpenalized and absorbs `−Σ b_j (θ_j' − θ_j)`.
/// Relative slack on the stay-at-zero test, so rounding in the gradient does
/// not release a coordinate at exactly `λ = λ_max`.
const ZERO_SLACK: f64 = 1e-9;

fn propose(theta: &[f64], delta: &[f64], eta: f64, pc: &Precond, penalties: &[f64]) -> Vec<f64> {
    let g0 = delta[0];
    let mut next = theta.to_vec();
    let mut shift = 0.0;
    for j in 1..theta.len() {
        let g = delta[j] - pc.slopes[j] * g0;
        let rate = eta * pc.rates[j];
        let lam = penalties[j];
        let old = theta[j];
        let new = if lam == 0.0 {
            old + rate * g
        } else if old == 0.0 {
            if g.abs() <= lam * (1.0 + ZERO_SLACK) {
                0.0
            } else {
                rate * g.signum() * (g.abs() - lam)
            }
        } else {
            let cand = old + rate * (g - lam * old.signum());
            if cand.signum() != old.signum() {
                0.0
            } else {
                cand
            }
        };
        next[j] = new;
        shift += pc.slopes[j] * (new - old);
    }
    next[0] = theta[0] + eta * pc.rates[0] * g0 - shift;
    next
}

/// Average of the last `w` iterates. A penalized coordinate that is zero in at
/// least half of them is reported as exactly zero.
fn tail_average(trace: &FitTrace, w: usize, penalties: &[f64]) -> Vec<f64> {
    let recs = &trace.records[trace.len().saturating_sub(w)..];
    let p = penalties.len();
    (0..p)
        .map(|j| {
            let zeros = recs.iter().filter(|r| r.theta[j] == 0.0).count();
            if penalties[j] > 0.0 && 2 * zeros >= recs.len() {
                0.0
            } else {
                recs.iter().map(|r| r.theta[j]).sum::<f64>() / recs.len() as f64
            }
        })
        .collect()
}

/// Unpenalized SGD fit of `spec` to `observed`.
pub fn fit_mle(model: &Model, observed: &Network, cfg: SgdConfig) -> Result<Fit> {
    Estimator::mcmc(model, observed, cfg)?.fit_mle()
}

/// L1-penalized SGD fit at penalty `lambda`.
pub fn fit_lasso(model: &Model, observed: &Network, lambda: f64, cfg: SgdConfig) -> Result<Fit> {
    if !(lambda >= 0.0) {
        return Err(Error::Usage(format!("lambda must be non-negative, got {lambda}")));
    }
    Estimator::mcmc(model, observed, cfg)?.fit(lambda, None)
}
