//! Bayesian latent process model for monitoring the progress of
//! individuals towards a target measured by binary items.
//!
//! Individuals and items live in a shared metric space. The target is the
//! centroid of the item positions and, between consecutive time points,
//! each individual moves a fraction `lambda` of the way towards it. The
//! crate fits the model by Pólya-Gamma augmented Metropolis-within-Gibbs
//! sampling and turns the draws into progress summaries, geometry
//! comparisons (WAIC), convergence checks and interaction maps.

pub mod alignment;
pub mod andersen;
pub mod data;
pub mod diagnostics;
pub mod error;
pub mod io;
pub mod mcmc;
pub mod model;
pub mod par;
pub mod pg;
pub mod progress;
pub mod sim;
pub mod space;
pub mod stats;

pub use data::ResponseTensor;
pub use error::{Error, Result};
pub use mcmc::{run_chain, ChainConfig, PosteriorSamples};
pub use model::{Hyperparams, LatentState, ModelParams};
pub use space::{MetricKind, MetricSpace};
