//! Coefficient paths, importance scores, threshold selection and the
//! unpenalized refit with standard errors and AIC.

use std::path::Path;

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::estimator::{Estimator, Fit, SgdConfig};
use crate::graph::{dyad_count, AttributeTable, Network};
use crate::io::{fmt_f64, write_table};
use crate::sampler::{sample, sample_er, ChainInit, SamplerConfig};
use crate::statistics::{Model, ModelSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Spacing {
    Linear,
    Geometric,
    Custom,
}

/// Strictly decreasing penalty values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LambdaGrid {
    values: Vec<f64>,
    spacing: Spacing,
}

/// Default number of geometric grid points above zero.
pub const DEFAULT_GRID_POINTS: usize = 40;
/// Default ratio between the smallest and the largest positive grid value.
pub const DEFAULT_GRID_RATIO: f64 = 0.01;

impl LambdaGrid {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        Self::with_spacing(values, Spacing::Custom)
    }

    fn with_spacing(values: Vec<f64>, spacing: Spacing) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Usage("lambda grid is empty".into()));
        }
        if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::Usage("lambda values must be finite and non-negative".into()));
        }
        if values.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::Usage("lambda grid must be strictly decreasing".into()));
        }
        Ok(LambdaGrid { values, spacing })
    }

    /// `points` values from `max` down to `ratio · max` on a log scale,
    /// followed by 0 when `zero` is set.
    pub fn geometric(max: f64, ratio: f64, points: usize, zero: bool) -> Result<Self> {
        if !(max > 0.0) || !(ratio > 0.0 && ratio < 1.0) || points == 0 {
            return Err(Error::Usage(
                "geometric grid needs max > 0, 0 < ratio < 1 and at least one point".into(),
            ));
        }
        let mut v: Vec<f64> = if points == 1 {
            vec![max]
        } else {
            (0..points)
                .map(|k| max * ratio.powf(k as f64 / (points - 1) as f64))
                .collect()
        };
        if zero {
            v.push(0.0);
        }
        Self::with_spacing(v, Spacing::Geometric)
    }

    /// `points` equally spaced values from `max` down to 0 inclusive.
    pub fn linear(max: f64, points: usize) -> Result<Self> {
        if !(max > 0.0) || points < 2 {
            return Err(Error::Usage("linear grid needs max > 0 and at least two points".into()));
        }
        let v = (0..points)
            .map(|k| max * (1.0 - k as f64 / (points - 1) as f64))
            .collect();
        Self::with_spacing(v, Spacing::Linear)
    }

    /// Parses a grid description:
    ///
    /// * `geom[:POINTS[:RATIO]]` (default `geom:40:0.01`, zero appended)
    /// * `lin[:POINTS]`
    /// * a comma-separated list such as `4,2,1,0`
    ///
    /// `lambda_max` is required by the first two forms.
    pub fn parse(text: &str, lambda_max: Option<f64>) -> Result<Self> {
        let bad = || Error::Usage(format!("cannot parse lambda grid '{text}'"));
        let mut parts = text.split(':');
        let head = parts.next().unwrap_or("");
        let need_max = || lambda_max.ok_or_else(|| Error::Usage("grid needs lambda_max".into()));
        match head {
            "geom" | "auto" => {
                let points = parts.next().map(str::parse).transpose().map_err(|_| bad())?;
                let ratio = parts.next().map(str::parse).transpose().map_err(|_| bad())?;
                Self::geometric(
                    need_max()?,
                    ratio.unwrap_or(DEFAULT_GRID_RATIO),
                    points.unwrap_or(DEFAULT_GRID_POINTS),
                    true,
                )
            }
            "lin" => {
                let points = parts.next().map(str::parse).transpose().map_err(|_| bad())?;
                Self::linear(need_max()?, points.unwrap_or(DEFAULT_GRID_POINTS + 1))
            }
            _ => {
                let v = text
                    .split(',')
                    .map(|s| s.trim().parse::<f64>())
                    .collect::<std::result::Result<Vec<_>, _>>()
                    .map_err(|_| bad())?;
                Self::new(v)
            }
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn spacing(&self) -> Spacing {
        self.spacing
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Smallest penalty keeping every penalized coefficient at zero, estimated
/// from `m` Erdős–Rényi draws at the observed density (the edges-only fit).
///
/// The search doubles from `1e-3` until the zero-subgradient condition
/// `max_j |s_obs,j − E[s_j]| ≤ λ` holds, then bisects to relative `1e-6`.
pub fn lambda_max(model: &Model, observed: &Network, m: usize, seed: u64) -> Result<f64> {
    if m < 2 {
        return Err(Error::Usage("lambda_max needs at least 2 draws".into()));
    }
    let obs = model.scaled_stats(observed)?;
    let nets = sample_er(observed.n_nodes(), observed.density(), m, seed)?;
    let rows = nets
        .par_iter()
        .map(|n| model.scaled_stats(n))
        .collect::<Result<Vec<_>>>()?;
    let penalized = model.spec().penalized();
    let score = (0..obs.len())
        .filter(|&j| penalized[j])
        .map(|j| {
            let mean = rows.iter().map(|r| r[j]).sum::<f64>() / m as f64;
            (obs[j] - mean).abs()
        })
        .fold(0.0f64, f64::max);
    let zero_ok = |l: f64| score <= l;
    let mut hi = 1e-3;
    while !zero_ok(hi) {
        hi *= 2.0;
    }
    let mut lo = if hi > 1e-3 { hi / 2.0 } else { 0.0 };
    while hi - lo > 1e-6 * hi {
        let mid = 0.5 * (lo + hi);
        if zero_ok(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathConfig {
    pub sgd: SgdConfig,
    /// Largest tolerated `‖θ̂(λ_{g+1}) − θ̂(λ_g)‖∞` before a point is flagged.
    pub jump_threshold: f64,
}

impl Default for PathConfig {
    fn default() -> Self {
        PathConfig {
            sgd: SgdConfig::default(),
            jump_threshold: 5.0,
        }
    }
}

/// Coefficient path over a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathResult {
    pub labels: Vec<String>,
    pub scales: Vec<f64>,
    pub penalized: Vec<bool>,
    pub grid: Vec<f64>,
    /// `coefficients[g][j]`, scaled units.
    pub coefficients: Vec<Vec<f64>>,
    pub converged: Vec<bool>,
    /// Grid indices `g` where the jump from `g − 1` exceeded the threshold.
    pub jumps: Vec<usize>,
    /// `R_j`; `None` for edges, unpenalized terms and never-selected terms.
    pub importance: Vec<Option<f64>>,
    pub seed: u64,
}

impl PathResult {
    fn finish(mut self) -> Self {
        self.importance = importance_scores(&self);
        self
    }

    /// Sign of the coefficient at the largest grid value where it is nonzero.
    pub fn first_sign(&self, j: usize) -> i8 {
        self.grid
            .iter()
            .enumerate()
            .filter(|&(g, _)| self.converged[g])
            .map(|(g, _)| self.coefficients[g][j])
            .find(|c| *c != 0.0)
            .map(|c| if c > 0.0 { 1 } else { -1 })
            .unwrap_or(0)
    }

    /// Coefficients in raw units (scaled coefficient over scale factor).
    pub fn raw_coefficients(&self) -> Vec<Vec<f64>> {
        self.coefficients
            .iter()
            .map(|row| row.iter().zip(&self.scales).map(|(c, s)| c / s).collect())
            .collect()
    }

    /// Writes `lambda,<labels…>` with one row per grid point.
    pub fn write_csv(&self, path: &Path, raw: bool) -> Result<()> {
        let mut header = vec!["lambda".to_string()];
        header.extend(self.labels.iter().cloned());
        let coefs = if raw {
            self.raw_coefficients()
        } else {
            self.coefficients.clone()
        };
        let rows: Vec<Vec<String>> = self
            .grid
            .iter()
            .zip(&coefs)
            .map(|(l, row)| {
                let mut r = vec![fmt_f64(*l)];
                r.extend(row.iter().map(|&c| fmt_f64(c)));
                r
            })
            .collect();
        write_table(path, &header, &rows)
    }

    /// Writes `term,importance_score,first_sign` in ranking order; never
    /// selected terms get `NA`.
    pub fn write_ranking(&self, path: &Path) -> Result<()> {
        let header = ["term", "importance_score", "first_sign"].map(String::from);
        let rows: Vec<Vec<String>> = rank(self)
            .into_iter()
            .map(|j| {
                vec![
                    self.labels[j].clone(),
                    self.importance[j].map(fmt_f64).unwrap_or_else(|| "NA".into()),
                    self.first_sign(j).to_string(),
                ]
            })
            .collect();
        write_table(path, &header, &rows)
    }
}

/// `R_j = max{λ_g : θ̂_j(λ_g) ≠ 0}` over converged grid points.
fn importance_scores(path: &PathResult) -> Vec<Option<f64>> {
    if path.converged.iter().any(|c| !c) {
        log::warn!(
            "{} of {} path fits did not converge; importance scores ignore them",
            path.converged.iter().filter(|c| !**c).count(),
            path.converged.len()
        );
    }
    (0..path.labels.len())
        .map(|j| {
            if !path.penalized[j] {
                return None;
            }
            path.grid
                .iter()
                .enumerate()
                .filter(|&(g, _)| path.converged[g] && path.coefficients[g][j] != 0.0)
                .map(|(_, &l)| l)
                .fold(None, |a: Option<f64>, l| Some(a.map_or(l, |x| x.max(l))))
        })
        .collect()
}

/// Fits the penalized model at every grid value, largest first, each fit
/// warm-started from the previous solution and sharing the same chains.
pub fn compute_path(
    model: &Model,
    observed: &Network,
    grid: &LambdaGrid,
    cfg: &PathConfig,
) -> Result<PathResult> {
    let mut est = Estimator::mcmc(model, observed, cfg.sgd.clone())?;
    compute_path_with(&mut est, model.spec(), grid, cfg)
}

/// [`compute_path`] with a caller-supplied estimator (for instance one on
/// exact moments).
pub fn compute_path_with(
    est: &mut Estimator<'_>,
    spec: &ModelSpec,
    grid: &LambdaGrid,
    cfg: &PathConfig,
) -> Result<PathResult> {
    let mut coefficients: Vec<Vec<f64>> = Vec::with_capacity(grid.len());
    let mut converged = Vec::with_capacity(grid.len());
    let mut jumps = Vec::new();
    for (g, &lambda) in grid.values().iter().enumerate() {
        let start = coefficients.last().cloned();
        let fit = est.fit(lambda, start.as_deref())?;
        log::debug!(
            "lambda {lambda}: {} iterations, converged {}",
            fit.iterations,
            fit.converged
        );
        if let Some(prev) = &start {
            let jump = prev
                .iter()
                .zip(&fit.theta)
                .fold(0.0f64, |a, (x, y)| a.max((x - y).abs()));
            if jump > cfg.jump_threshold {
                log::warn!("path jump of {jump} at lambda {lambda}");
                jumps.push(g);
            }
        }
        converged.push(fit.converged);
        coefficients.push(fit.theta);
    }
    Ok(PathResult {
        labels: spec.labels(),
        scales: spec.scales(),
        penalized: spec.penalized(),
        grid: grid.values().to_vec(),
        coefficients,
        converged,
        jumps,
        importance: Vec::new(),
        seed: est.config().seed,
    }
    .finish())
}

/// Penalized term indices ordered by importance.
///
/// Higher `R` first; never-selected terms last. Ties go to the larger
/// `|θ̂|` at the largest grid value where both are nonzero, then to spec order.
pub fn rank(path: &PathResult) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..path.labels.len()).filter(|&j| path.penalized[j]).collect();
    idx.sort_by(|&a, &b| {
        let key = |j: usize| path.importance[j].unwrap_or(f64::NEG_INFINITY);
        key(b)
            .partial_cmp(&key(a))
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| {
                let both = path
                    .grid
                    .iter()
                    .enumerate()
                    .find(|&(g, _)| {
                        path.converged[g]
                            && path.coefficients[g][a] != 0.0
                            && path.coefficients[g][b] != 0.0
                    })
                    .map(|(g, _)| g);
                match both {
                    Some(g) => {
                        let (ca, cb) = (path.coefficients[g][a].abs(), path.coefficients[g][b].abs());
                        cb.partial_cmp(&ca).unwrap_or(std::cmp::Ordering::Equal)
                    }
                    None => std::cmp::Ordering::Equal,
                }
            })
            .then(a.cmp(&b))
    });
    idx
}

/// Settings of the log-likelihood bridge.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BridgeConfig {
    /// Grid points on `[0, 1]`, endpoints included.
    pub points: usize,
    /// Draws per grid point.
    pub m: usize,
    /// Burn-in in toggle attempts; `None` means 20 sweeps.
    pub burn_in: Option<usize>,
    /// Thinning in toggle attempts; `None` means one sweep.
    pub thin: Option<usize>,
    pub seed: u64,
}

impl Default for BridgeConfig {
    fn default() -> Self {
        BridgeConfig {
            points: 20,
            m: 500,
            burn_in: None,
            thin: None,
            seed: 20_240_602,
        }
    }
}

/// `s(y_obs)·θ − log κ(θ)`.
///
/// `log κ` is obtained by integrating `E_{θ(u)}[s]·(θ − θ₀)` along the segment
/// `θ(u) = θ₀ + u(θ − θ₀)` with the trapezoid rule, where `θ₀` keeps the
/// edges coefficient of `θ` and zeroes the rest, so `log κ(θ₀)` is the
/// Bernoulli value `D log(1 + e^{θ_edges})`.
pub fn estimate_loglik(model: &Model, observed: &Network, theta: &[f64], cfg: &BridgeConfig) -> Result<f64> {
    let p = model.n_terms();
    if theta.len() != p {
        return Err(Error::Usage("theta does not match the model".into()));
    }
    if theta.iter().any(|t| !t.is_finite()) {
        return Err(Error::Numerical(format!("non-finite theta {theta:?}")));
    }
    if cfg.points < 2 || cfg.m == 0 {
        return Err(Error::Usage("bridge needs at least 2 points and 1 draw".into()));
    }
    let obs = model.scaled_stats(observed)?;
    let n = observed.n_nodes();
    let d = dyad_count(n).max(1);
    // Edges has scale 1, so θ₀ is the same in scaled and raw units.
    let mut theta0 = vec![0.0; p];
    theta0[0] = theta[0];
    let log_kappa0 = d as f64 * softplus(theta[0]);
    let dir: Vec<f64> = theta.iter().zip(&theta0).map(|(a, b)| a - b).collect();
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();

    let log_kappa = if dir.iter().all(|x| *x == 0.0) {
        log_kappa0
    } else {
        let k = cfg.points;
        let values = (0..k)
            .into_par_iter()
            .map(|i| {
                let u = i as f64 / (k - 1) as f64;
                let th: Vec<f64> = theta0.iter().zip(&dir).map(|(a, b)| a + u * b).collect();
                let scfg = SamplerConfig {
                    burn_in: cfg.burn_in.unwrap_or(20 * d),
                    thin: cfg.thin.unwrap_or(d).max(1),
                    m: cfg.m,
                    seed: cfg.seed ^ (i as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15),
                    init: ChainInit::Observed,
                    chains: 1,
                };
                let s = sample(model, &th, observed, &scfg).map_err(|e| match e {
                    Error::Numerical(m) => Error::Numerical(format!("bridge point u = {u}: {m}")),
                    Error::Degenerate(m) => Error::Degenerate(format!("bridge point u = {u}: {m}")),
                    other => other,
                })?;
                Ok(dot(&s.mean(), &dir))
            })
            .collect::<Result<Vec<f64>>>()?;
        let h = 1.0 / (k - 1) as f64;
        let integral = h * (values.iter().sum::<f64>() - 0.5 * (values[0] + values[k - 1]));
        log_kappa0 + integral
    };
    Ok(dot(&obs, theta) - log_kappa)
}

fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InferenceConfig {
    pub sgd: SgdConfig,
    /// Draws used to estimate the statistic covariance at `θ̂`.
    pub cov_draws: usize,
    /// Burn-in of the covariance sample; `None` means 20 sweeps.
    pub burn_in: Option<usize>,
    /// Thinning of the covariance sample; `None` means one sweep.
    pub thin: Option<usize>,
    pub bridge: BridgeConfig,
}

impl Default for InferenceConfig {
    fn default() -> Self {
        InferenceConfig {
            sgd: SgdConfig::default(),
            cov_draws: 2000,
            burn_in: None,
            thin: None,
            bridge: BridgeConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermReport {
    pub term: String,
    pub scale: f64,
    /// Coefficient on the scaled statistic.
    pub estimate: f64,
    pub std_error: f64,
    /// Coefficient on the raw statistic.
    pub estimate_raw: f64,
    pub std_error_raw: f64,
    pub z: f64,
    pub p_value: f64,
}

/// Unpenalized refit of a selected model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub terms: Vec<TermReport>,
    pub loglik: f64,
    /// Number of estimated coefficients, edges included.
    pub k: usize,
    pub aic: f64,
    pub converged: bool,
    pub iterations: usize,
    pub n_nodes: usize,
    pub n_edges: usize,
}

impl FitReport {
    pub fn labels(&self) -> Vec<String> {
        self.terms.iter().map(|t| t.term.clone()).collect()
    }

    pub fn estimates(&self) -> Vec<f64> {
        self.terms.iter().map(|t| t.estimate).collect()
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }
}

/// Standard errors `sqrt(diag Σ⁻¹)` of a statistic covariance, or the
/// collinear terms when `Σ` is numerically singular.
pub fn standard_errors(cov: &[f64], labels: &[String]) -> Result<Vec<f64>> {
    let p = labels.len();
    if cov.len() != p * p {
        return Err(Error::Usage("covariance does not match the labels".into()));
    }
    let m = DMatrix::from_row_slice(p, p, cov);
    let eig = SymmetricEigen::new(m.clone());
    let (kmin, &emin) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("non-empty");
    let emax = eig.eigenvalues.iter().cloned().fold(0.0, f64::max);
    if !(emin > 1e-10 * emax) {
        let v = eig.eigenvectors.column(kmin);
        let names = (0..p)
            .filter(|&j| v[j].abs() > 0.1)
            .map(|j| labels[j].clone())
            .collect();
        return Err(Error::Collinear(names));
    }
    let inv = m
        .cholesky()
        .ok_or_else(|| Error::Collinear(labels.to_vec()))?
        .inverse();
    Ok((0..p).map(|j| inv[(j, j)].sqrt()).collect())
}

/// Two-sided normal tail probability of `z`.
pub fn two_sided_p(z: f64) -> f64 {
    let n = Normal::new(0.0, 1.0).expect("standard normal");
    (2.0 * n.cdf(-z.abs())).clamp(0.0, 1.0)
}

const COVARIANCE_STREAM: u64 = 0xC0FF_EE00_D15E_A5E5;

/// Unpenalized fit of `spec` with Wald inference, log-likelihood and AIC.
pub fn refit_inference(
    observed: &Network,
    attrs: &AttributeTable,
    spec: &ModelSpec,
    cfg: &InferenceConfig,
) -> Result<FitReport> {
    let model = Model::new(spec, attrs, observed.n_nodes())?;
    let fit = Estimator::mcmc(&model, observed, cfg.sgd.clone())?.fit_mle()?;
    inference_at(&model, observed, &fit, cfg)
}

/// Wald inference, log-likelihood and AIC at an existing fit.
///
/// The statistic covariance at `θ̂` is the Fisher information, so the
/// standard errors are `sqrt(diag Σ̂⁻¹)`.
pub fn inference_at(model: &Model, observed: &Network, fit: &Fit, cfg: &InferenceConfig) -> Result<FitReport> {
    let n = observed.n_nodes();
    let d = dyad_count(n).max(1);
    let spec = model.spec();
    let theta = &fit.theta;
    let scfg = SamplerConfig {
        burn_in: cfg.burn_in.unwrap_or(20 * d),
        thin: cfg.thin.unwrap_or(d).max(1),
        m: cfg.cov_draws,
        seed: cfg.sgd.seed ^ COVARIANCE_STREAM,
        init: ChainInit::Observed,
        chains: cfg.sgd.chains,
    };
    let s = sample(model, theta, observed, &scfg)?;
    let labels = spec.labels();
    let se = standard_errors(&s.covariance(), &labels)?;
    let loglik = estimate_loglik(model, observed, theta, &cfg.bridge)?;
    let scales = spec.scales();
    let terms = (0..spec.len())
        .map(|j| {
            let z = theta[j] / se[j];
            TermReport {
                term: labels[j].clone(),
                scale: scales[j],
                estimate: theta[j],
                std_error: se[j],
                estimate_raw: theta[j] / scales[j],
                std_error_raw: se[j] / scales[j],
                z,
                p_value: two_sided_p(z),
            }
        })
        .collect();
    let k = spec.len();
    Ok(FitReport {
        terms,
        loglik,
        k,
        aic: 2.0 * k as f64 - 2.0 * loglik,
        converged: fit.converged,
        iterations: fit.iterations,
        n_nodes: n,
        n_edges: observed.edge_count(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Criterion {
    Aic,
    Pvalue { alpha: f64 },
}

/// One step of the threshold walk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WalkStep {
    /// Term added at this step (`edges` for the base model).
    pub term: String,
    pub aic: Option<f64>,
    /// p-value of the added term in the refit.
    pub p_value: Option<f64>,
    pub accepted: bool,
    /// Why the walk stopped here, if it did.
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    /// Selected term indices into the candidate spec (0 = edges first).
    pub selected: Vec<usize>,
    pub labels: Vec<String>,
    pub walk: Vec<WalkStep>,
    pub report: FitReport,
}

impl Selection {
    pub fn write_walk(&self, path: &Path) -> Result<()> {
        let header = ["step", "term", "aic", "p_value", "accepted", "note"].map(String::from);
        let opt = |x: Option<f64>| x.map(fmt_f64).unwrap_or_else(|| "NA".into());
        let rows: Vec<Vec<String>> = self
            .walk
            .iter()
            .enumerate()
            .map(|(i, w)| {
                vec![
                    i.to_string(),
                    w.term.clone(),
                    opt(w.aic),
                    opt(w.p_value),
                    w.accepted.to_string(),
                    w.note.clone().unwrap_or_default(),
                ]
            })
            .collect();
        write_table(path, &header, &rows)
    }
}

/// Walks the ranking top-down, refitting cumulative unpenalized models.
///
/// AIC mode stops before the first addition that raises AIC; p-value mode
/// stops before the first addition whose own coefficient has `p > alpha`.
/// A refit that fails or does not converge ends the walk at the last stable
/// model. Never-selected terms are not offered.
pub fn select_threshold(
    path: &PathResult,
    observed: &Network,
    attrs: &AttributeTable,
    spec: &ModelSpec,
    criterion: Criterion,
    cfg: &InferenceConfig,
) -> Result<Selection> {
    if spec.labels() != path.labels {
        return Err(Error::Usage("path does not belong to this model".into()));
    }
    if let Criterion::Pvalue { alpha } = criterion {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::Usage(format!("significance level must be in (0, 1), got {alpha}")));
        }
    }
    // Unpenalized non-edges terms are always kept.
    let mut selected: Vec<usize> = (0..spec.len()).filter(|&j| !path.penalized[j]).collect();
    let mut report = refit_inference(observed, attrs, &spec.subset(&selected)?, cfg)?;
    if !report.converged {
        return Err(Error::NonConvergence {
            iterations: report.iterations,
        });
    }
    let mut walk = vec![WalkStep {
        term: selected.iter().map(|&j| path.labels[j].clone()).collect::<Vec<_>>().join("+"),
        aic: Some(report.aic),
        p_value: None,
        accepted: true,
        note: None,
    }];

    for j in rank(path) {
        if path.importance[j].is_none() {
            break;
        }
        let mut trial = selected.clone();
        trial.push(j);
        trial.sort_unstable();
        let label = path.labels[j].clone();
        let attempt = spec.subset(&trial).and_then(|s| refit_inference(observed, attrs, &s, cfg));
        let r = match attempt {
            Ok(r) if r.converged => r,
            Ok(r) => {
                walk.push(WalkStep {
                    term: label,
                    aic: Some(r.aic),
                    p_value: None,
                    accepted: false,
                    note: Some("refit did not converge".into()),
                });
                break;
            }
            Err(e) if !e.is_input_error() => {
                walk.push(WalkStep {
                    term: label,
                    aic: None,
                    p_value: None,
                    accepted: false,
                    note: Some(e.to_string()),
                });
                break;
            }
            Err(e) => return Err(e),
        };
        let p = r
            .terms
            .iter()
            .find(|t| t.term == label)
            .map(|t| t.p_value)
            .expect("added term is reported");
        let accept = match criterion {
            Criterion::Aic => r.aic <= report.aic,
            Criterion::Pvalue { alpha } => p <= alpha,
        };
        walk.push(WalkStep {
            term: label,
            aic: Some(r.aic),
            p_value: Some(p),
            accepted: accept,
            note: if accept { None } else { Some("stop".into()) },
        });
        if !accept {
            break;
        }
        selected = trial;
        report = r;
    }
    Ok(Selection {
        labels: selected.iter().map(|&j| path.labels[j].clone()).collect(),
        selected,
        walk,
        report,
    })
}
