//! Multi-threaded versions of the sampling and extraction loops. Both produce
//! exactly the output of their single-threaded counterparts.

use ase_qrng_core::extractor::{Bits, Extracted, ToeplitzExtractor};
use ase_qrng_core::photon::PhotonDistribution;
use ase_qrng_core::sampling::{sample_into, PhotonCountTrace, SampleRequest, DEFAULT_CHUNK_SIZE};
use bitvec::prelude::*;
use rayon::prelude::*;

use crate::error::Result;

pub fn sample_parallel(distribution: &PhotonDistribution, count: usize, master_seed: u64) -> Result<PhotonCountTrace> {
    SampleRequest::new(distribution, count, master_seed).validate()?;
    let mut counts = vec![0u64; count];
    counts
        .par_chunks_mut(DEFAULT_CHUNK_SIZE)
        .enumerate()
        .for_each(|(i, chunk)| sample_into(distribution, master_seed, (i * DEFAULT_CHUNK_SIZE) as u64, chunk));
    Ok(PhotonCountTrace {
        counts,
        source_model: distribution.model().copied(),
    })
}

/// Blocks are hashed in parallel and concatenated in input order.
pub fn extract_parallel(extractor: &ToeplitzExtractor, bits: &BitSlice<u64, Lsb0>) -> Extracted {
    const BLOCKS_PER_TASK: usize = 256;
    let n = extractor.spec().input_block_bits();
    let whole = bits.len() / n * n;
    let pieces: Vec<Bits> = (0..whole)
        .step_by(n * BLOCKS_PER_TASK)
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|start| extractor.extract(&bits[start..(start + n * BLOCKS_PER_TASK).min(whole)]).bits)
        .collect();
    let mut out = Bits::with_capacity(whole / n * extractor.spec().output_block_bits());
    for piece in pieces {
        out.extend_from_bitslice(&piece);
    }
    Extracted {
        bits: out,
        discarded_bits: bits.len() - whole,
    }
}
