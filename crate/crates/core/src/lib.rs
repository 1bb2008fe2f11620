//! LASSO-based variable selection for exponential random graph models.
//!
//! The crate fits penalized ERGMs by simulation-based stochastic subgradient
//! ascent, traces coefficient paths over a penalty grid, ranks candidate
//! statistics by the largest penalty at which they stay in the model, and
//! refits the selected model without penalty.
//!
//! Module map:
//! - [`graph`]: networks, dyads and node attributes
//! - [`statistics`]: model terms, sufficient and change statistics, standardization
//! - [`sampler`]: Metropolis–Hastings tie-toggle chains and Erdős–Rényi draws
//! - [`oracle`]: exact enumeration for networks of up to seven nodes
//! - [`estimator`]: stochastic gradient MLE and its L1-penalized variant
//! - [`selector`]: coefficient paths, importance ranking, threshold selection and refits
//! - [`io`]: edge lists, attribute tables and model-spec files
//! - [`simulate`]: generators for the synthetic study setups
//! - [`plot`]: SVG coefficient-path plots

pub mod error;
pub mod estimator;
pub mod graph;
pub mod io;
pub mod oracle;
pub mod plot;
pub mod sampler;
pub mod selector;
pub mod simulate;
pub mod statistics;

pub use error::{Error, Result};
pub use graph::{AttributeTable, Column, ColumnValues, Dyad, Network};
pub use estimator::{fit_lasso, fit_mle, Fit, SgdConfig};
pub use selector::{compute_path, rank, refit_inference, select_threshold, FitReport, LambdaGrid, PathResult};
pub use statistics::{compute_stats, change_stats, standardize, Model, ModelSpec, StatVector, Term, TermKind};
