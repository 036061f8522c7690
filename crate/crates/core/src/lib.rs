//! Trend-responsive user segmentation and contextual ε-greedy news
//! recommendation, with an offline simulation harness for hyperparameter
//! selection and a publishing-insight generator.
//!
//! The crate is organized as a pipeline:
//!
//! 1. [`corpus`] — ingest articles/events and tokenize text.
//! 2. [`topics`] — LDA topic model (collapsed Gibbs), perplexity, trends.
//! 3. [`profiles`] — per-user topic-interest vectors, population-standardized.
//! 4. [`segments`] — bisecting k-means user segmentation and descriptions.
//! 5. [`bandit`] — contextual ε-greedy selection over a sliding reward window.
//! 6. [`serving`] — cached recommendation resolution (stale-while-revalidate).
//! 7. [`simulator`] — offline episodes, (l, ε) sweeps, and an A/B harness.
//! 8. [`insights`] — unsatisfied-segment detection and report rendering.
//!
//! All randomized components take explicit seeds and are deterministic in
//! single-threaded mode.

pub mod bandit;
pub mod config;
pub mod corpus;
pub mod error;
pub mod insights;
pub mod profiles;
pub mod segments;
pub mod serving;
pub mod simulator;
pub mod synthetic;
pub mod topics;

mod util;

pub use error::{Error, Result};
