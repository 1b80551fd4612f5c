//! File formats, configuration, statistics and the batch runner around
//! `ase_qrng_core`.

pub use ase_qrng_core as core;

pub mod config;
pub mod error;
pub mod experiment;
pub mod formats;
pub mod parallel;
pub mod stats;

pub use error::{AppError, Result};
