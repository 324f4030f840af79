//! Enthymeme decoding over AMR: providers, datasets, evaluation, sweeps and
//! argument graphs.

pub mod dataset;
pub mod graph;
pub mod pipeline;
pub mod providers;
pub mod sweep;

pub use enthymeme_core as core;
