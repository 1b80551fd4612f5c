//! Inverse-transform sampling of photon counts.
//!
//! Sample `i` of a request uses the 64-bit word at position `i` of the ChaCha8
//! stream [`rng::PHOTON_STREAM`] keyed by the master seed. The uniform
//! `u ∈ (0, 1)` is inverted exactly on the stored cumulative function: the
//! returned count is the smallest `k` with `F(k) ≥ u`. Since every sample
//! addresses its own position in the stream, any chunking (or parallel
//! schedule) of the index range gives the same trace.

use alloc::vec;
use alloc::vec::Vec;

use rand::RngCore;

use crate::error::{Error, Result};
use crate::histogram::Histogram;
use crate::photon::{ModalModel, PhotonDistribution};
use crate::rng;

pub const DEFAULT_CHUNK_SIZE: usize = 1 << 16;

#[derive(Debug, Clone, Copy)]
pub struct SampleRequest<'a> {
    pub distribution: &'a PhotonDistribution,
    pub count: usize,
    pub master_seed: u64,
    pub chunk_size: usize,
}

impl<'a> SampleRequest<'a> {
    pub fn new(distribution: &'a PhotonDistribution, count: usize, master_seed: u64) -> Self {
        SampleRequest {
            distribution,
            count,
            master_seed,
            chunk_size: DEFAULT_CHUNK_SIZE,
        }
    }

    pub fn with_chunk_size(mut self, chunk_size: usize) -> Self {
        self.chunk_size = chunk_size;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.count == 0 {
            return Err(Error::Empty("sample request"));
        }
        if self.chunk_size == 0 {
            return Err(Error::domain("chunk_size", "must be at least 1"));
        }
        let last = self.distribution.cumulative().last().copied().unwrap_or(0.0);
        if (last - 1.0).abs() > 1e-9 {
            return Err(Error::Unnormalized(last));
        }
        Ok(())
    }
}

/// Photon counts drawn from a distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct PhotonCountTrace {
    pub counts: Vec<u64>,
    pub source_model: Option<ModalModel>,
}

impl PhotonCountTrace {
    pub fn new(counts: Vec<u64>) -> Result<Self> {
        if counts.is_empty() {
            return Err(Error::Empty("photon count trace"));
        }
        Ok(PhotonCountTrace {
            counts,
            source_model: None,
        })
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }
}

/// Smallest index `k` with `cumulative[k] ≥ u`, clamped to the last index.
#[inline]
pub fn invert_cumulative(cumulative: &[f64], u: f64) -> usize {
    cumulative
        .partition_point(|f| *f < u)
        .min(cumulative.len().saturating_sub(1))
}

/// Fills `out` with the samples at indices `start_index ..` of the trace
/// identified by `master_seed`. The building block for chunked and parallel
/// generation.
pub fn sample_into(
    distribution: &PhotonDistribution,
    master_seed: u64,
    start_index: u64,
    out: &mut [u64],
) {
    let mut rng = rng::stream(master_seed, rng::PHOTON_STREAM);
    // next_u64 consumes two 32-bit words.
    rng.set_word_pos(u128::from(start_index) * 2);
    let cumulative = distribution.cumulative();
    let base = distribution.support_min();
    for slot in out {
        let u = rng::open_unit(rng.next_u64());
        *slot = base + invert_cumulative(cumulative, u) as u64;
    }
}

pub fn inverse_transform_sample(request: &SampleRequest<'_>) -> Result<PhotonCountTrace> {
    request.validate()?;
    let mut counts = vec![0u64; request.count];
    for (i, chunk) in counts.chunks_mut(request.chunk_size).enumerate() {
        let start = (i * request.chunk_size) as u64;
        sample_into(request.distribution, request.master_seed, start, chunk);
    }
    Ok(PhotonCountTrace {
        counts,
        source_model: request.distribution.model().copied(),
    })
}

/// Relative frequency of every distinct photon count.
pub fn empirical_pmf(trace: &PhotonCountTrace) -> Result<Histogram<u64>> {
    Histogram::from_values(&trace.counts)
}
