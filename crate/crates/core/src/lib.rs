//! Knowledge-graph embedding with cache-based negative sampling.
//!
//! The crate is organised bottom-up:
//!
//! - [`data`]: triple files, indexing, relation statistics and synthetic graphs.
//! - [`scoring`]: embedding storage, the scoring functions, losses and their
//!   analytic gradients, plus the binary checkpoint format.
//! - [`sampler`]: uniform, Bernoulli, self-adversarial and cache-based negative
//!   sampling.
//! - [`trainer`]: the mini-batch training loop with sparse Adam.
//! - [`eval`]: filtered link-prediction ranks, triplet classification and F1.
//! - [`automl`]: random search and SMBO over the sampler hyper-parameters.
//! - [`skipgram`]: biased random walks and skip-gram with per-node caches.
//! - [`analysis`]: gradient-norm CCDFs and online score-variance tracking.

pub mod analysis;
pub mod automl;
pub mod config;
pub mod data;
pub mod error;
pub mod eval;
pub mod fsio;
pub mod rng;
pub mod sampler;
pub mod scoring;
pub mod skipgram;
pub mod trainer;

pub use error::{Error, Result};
