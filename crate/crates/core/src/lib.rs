//! Evidential time-to-event prediction with Gaussian random fuzzy numbers.
//!
//! The crate provides
//!
//! - [`grfn`]: belief and plausibility calculus for Gaussian and lognormal
//!   random fuzzy numbers, product-intersection combination, belief
//!   prediction intervals and a Monte Carlo oracle;
//! - [`model`]: the prototype-based evidential regression network;
//! - [`training`]: the censoring-aware generalized likelihood loss, its
//!   analytic gradient and an Adam training loop;
//! - [`metrics`]: Kaplan-Meier, time-dependent concordance, IPCW integrated
//!   Brier score and binomial log-likelihood, BPI coverage;
//! - [`data`]: the synthetic simulator, CSV ingestion, standardization and
//!   cross-validation plans.
//!
//! Data-parallel loops run on rayon when the `parallel` feature is enabled
//! (the default). Reductions are performed in a fixed order, so results are
//! identical with and without it.

pub mod data;
pub mod error;
pub mod exec;
pub mod grfn;
pub mod metrics;
pub mod model;
pub mod seed;
pub mod training;

pub use error::{Error, Result};
pub use exec::Exec;
pub use grfn::{BeliefPlausibility, Grfn, LognormalRfn, RealInterval};
pub use model::{forward, init_params, similarities, Checkpoint, ModelParams, Prediction};
