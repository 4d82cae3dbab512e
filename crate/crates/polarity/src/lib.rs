//! File loading, experiment orchestration, reports and model formats on top
//! of [`polarity_core`].

pub mod config;
pub mod eval;
pub mod formats;
pub mod loaders;
pub mod parallel;
pub mod report;
pub mod seeds;

pub use polarity_core;
