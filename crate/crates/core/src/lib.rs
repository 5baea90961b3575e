//! Regenerative simulation for the two-block Gibbs sampler of the
//! Bayesian Lasso.
//!
//! The crate runs the two-block Gibbs sampler on `(β, τ)`, flags
//! regeneration times retrospectively through a minorization of the
//! transition kernel, and turns the resulting iid tours into standard
//! errors (a ratio estimator of the time-average variance constant) and
//! an ε-burn-in estimate. AR(1) approximations of each coefficient's trace
//! are provided as the heuristic baseline.
//!
//! Typical use goes through [`pipeline::run_pipeline`]; the building blocks
//! are public for finer control.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod diagnostics;
pub mod error;
pub mod lasso;
pub mod model;
pub mod pipeline;
pub mod regeneration;
pub mod rng;
pub mod samplers;
pub mod tuning;

pub use error::{Error, Result};
pub use model::{ChainState, Dataset, Hyperparams, ScaleMode, TourStats};
pub use rng::RngStream;
