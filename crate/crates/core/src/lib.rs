//! Text feature extraction and binary sentiment classification.
//!
//! This crate holds the algorithmic half of the toolkit and builds without
//! `std` (it needs `alloc`). File loading, model formats, the experiment
//! harness and the command-line front end live in the `polarity` crate.
//!
//! The pipeline is: [`corpus`] documents are turned into tokens by
//! [`preprocess`], vectorized by either [`tfidf`] or [`doc2vec`], fed to one
//! of the [`classify`] models, and scored with [`metrics`].
#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod classify;
pub mod corpus;
pub mod doc2vec;
mod error;
pub mod features;
pub mod math;
pub mod metrics;
pub mod preprocess;
pub mod tfidf;

pub use error::{Error, Result};

/// Deterministic random number generator used everywhere a seed is accepted.
pub type SeededRng = rand_chacha::ChaCha8Rng;
