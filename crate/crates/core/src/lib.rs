//! Photon statistics and randomness quantification for quantum random number
//! generators built on direct detection of amplified spontaneous emission
//! (ASE) noise.
//!
//! The crate is `no_std` (it needs `alloc`). Everything here is a pure
//! function over immutable values; file formats, configuration and the
//! command line live in the `ase-qrng` companion crate.
//!
//! Pipeline overview:
//!
//! 1. [`photon`]: mode number, mean photon numbers and the truncated
//!    M-fold degenerate Bose–Einstein distribution.
//! 2. [`sampling`]: seeded inverse-transform sampling of photon counts.
//! 3. [`detection`]: photon → voltage mapping plus electronic noise.
//! 4. [`entropy`]: theoretical, resolution-merged and empirical min-entropy.
//! 5. [`extractor`]: Toeplitz hashing of raw sample bits.

#![no_std]

extern crate alloc;

pub mod detection;
pub mod entropy;
pub mod error;
pub mod extractor;
pub mod histogram;
pub mod photon;
pub mod rng;
pub mod sampling;

pub use error::{Error, Result};
