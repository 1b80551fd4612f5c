//! Toeplitz-hashing randomness extraction.
//!
//! # Matrix convention
//!
//! A spec with input block `n`, output block `k` and seed `s` (length
//! `n + k − 1`) defines the `n × k` Toeplitz matrix
//!
//! ```text
//! A[i][j] = s[i − j]            if i ≥ j   (first column, top-down: s[0..n])
//! A[i][j] = s[n − 1 + j − i]    if i < j   (first row continues: s[n..n+k-1])
//! ```
//!
//! and each input block `x` (bits in stream order) maps to `y = Aᵀ·x` over
//! GF(2), i.e. `y[j] = ⊕ᵢ A[i][j]·x[i]`. For `n = 3`, `k = 2`, `s = 1011`:
//! `A = [[1,1],[0,1],[1,0]]`, and `x = 110` gives `y = 10`.

use alloc::vec::Vec;

use bitvec::prelude::*;
use rand::RngCore;

use crate::detection::VoltageTrace;
use crate::entropy::EntropyReport;
use crate::error::{Error, Result};
use crate::rng;

pub type Bits = BitVec<u64, Lsb0>;

pub const DEFAULT_INPUT_BLOCK_BITS: usize = 4096;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ToeplitzSpec {
    input_block_bits: usize,
    output_block_bits: usize,
    seed_bits: Bits,
}

impl ToeplitzSpec {
    pub fn new(input_block_bits: usize, output_block_bits: usize, seed_bits: Bits) -> Result<Self> {
        if input_block_bits == 0 {
            return Err(Error::domain("input_block_bits", "must be positive"));
        }
        if output_block_bits == 0 || output_block_bits > input_block_bits {
            return Err(Error::domain(
                "output_block_bits",
                "must lie in 1..=input_block_bits",
            ));
        }
        let expected = input_block_bits + output_block_bits - 1;
        if seed_bits.len() != expected {
            return Err(Error::SeedLength {
                expected,
                actual: seed_bits.len(),
            });
        }
        Ok(ToeplitzSpec {
            input_block_bits,
            output_block_bits,
            seed_bits,
        })
    }

    /// As [`ToeplitzSpec::new`], additionally requiring
    /// `k / n ≤ h_min / bits_per_sample`.
    pub fn with_entropy_bound(
        input_block_bits: usize,
        output_block_bits: usize,
        seed_bits: Bits,
        h_min: f64,
        bits_per_sample: u32,
    ) -> Result<Self> {
        let bound = h_min / f64::from(bits_per_sample);
        if output_block_bits as f64 > input_block_bits as f64 * bound {
            return Err(Error::RatioBound {
                n: input_block_bits,
                k: output_block_bits,
                bound,
            });
        }
        Self::new(input_block_bits, output_block_bits, seed_bits)
    }

    /// Output block size for an entropy report: `⌊h_merged⌋` bits kept per
    /// `bits_per_sample` raw bits, rounded down.
    pub fn output_bits_for(h_merged: f64, bits_per_sample: u32, input_block_bits: usize) -> usize {
        let per_sample = libm::floor(h_merged).max(0.0) as usize;
        (input_block_bits * per_sample / bits_per_sample as usize).min(input_block_bits)
    }

    /// A spec sized from an entropy report, with a seed drawn from
    /// `seed`.
    pub fn from_report(
        report: &EntropyReport,
        bits_per_sample: u32,
        input_block_bits: usize,
        seed: u64,
    ) -> Result<Self> {
        let k = Self::output_bits_for(report.h_merged, bits_per_sample, input_block_bits);
        let seed_bits = random_bits(input_block_bits + k.max(1) - 1, seed);
        Self::with_entropy_bound(input_block_bits, k, seed_bits, report.h_merged, bits_per_sample)
    }

    pub fn input_block_bits(&self) -> usize {
        self.input_block_bits
    }

    pub fn output_block_bits(&self) -> usize {
        self.output_block_bits
    }

    pub fn seed_bits(&self) -> &BitSlice<u64, Lsb0> {
        &self.seed_bits
    }

    /// `A[i][j]` of the convention documented at module level.
    pub fn entry(&self, i: usize, j: usize) -> bool {
        if i >= j {
            self.seed_bits[i - j]
        } else {
            self.seed_bits[self.input_block_bits - 1 + j - i]
        }
    }
}

/// `len` bits from the extractor stream of `seed`.
pub fn random_bits(len: usize, seed: u64) -> Bits {
    let mut rng = rng::stream(seed, rng::EXTRACTOR_STREAM);
    let words: Vec<u64> = (0..len.div_ceil(64)).map(|_| rng.next_u64()).collect();
    let mut bits = Bits::from_vec(words);
    bits.truncate(len);
    bits
}

/// Rank-maps samples onto their sorted distinct levels and writes each level
/// index as a `bits_per_sample`-wide word, most significant bit first.
pub fn raw_bits_from_trace(trace: &VoltageTrace, bits_per_sample: u32) -> Result<Bits> {
    if !(1..=64).contains(&bits_per_sample) {
        return Err(Error::domain("bits_per_sample", "must lie in 1..=64"));
    }
    let mut levels: Vec<f64> = trace.samples().iter().map(|v| v + 0.0).collect();
    levels.sort_unstable_by(f64::total_cmp);
    levels.dedup();
    if bits_per_sample < 64 && levels.len() as u128 > 1u128 << bits_per_sample {
        return Err(Error::TooManyLevels {
            levels: levels.len(),
            bits: bits_per_sample,
        });
    }
    let width = bits_per_sample as usize;
    let mut bits = Bits::with_capacity(trace.len() * width);
    for v in trace.samples() {
        let v = v + 0.0;
        let index = levels
            .binary_search_by(|l| l.total_cmp(&v))
            .expect("sample is one of the levels") as u64;
        for b in (0..width).rev() {
            bits.push((index >> b) & 1 == 1);
        }
    }
    Ok(bits)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Extracted {
    pub bits: Bits,
    /// Trailing input bits that did not fill a block.
    pub discarded_bits: usize,
}

/// A spec with its matrix columns precomputed as packed words.
#[derive(Debug, Clone)]
pub struct ToeplitzExtractor {
    spec: ToeplitzSpec,
    words_per_block: usize,
    columns: Vec<u64>,
}

impl ToeplitzExtractor {
    pub fn new(spec: ToeplitzSpec) -> Self {
        let n = spec.input_block_bits;
        let k = spec.output_block_bits;
        let words_per_block = n.div_ceil(64);
        let mut columns = alloc::vec![0u64; words_per_block * k];
        for j in 0..k {
            let column = &mut columns[j * words_per_block..(j + 1) * words_per_block];
            for i in 0..n {
                if spec.entry(i, j) {
                    column[i / 64] |= 1 << (i % 64);
                }
            }
        }
        ToeplitzExtractor {
            spec,
            words_per_block,
            columns,
        }
    }

    pub fn spec(&self) -> &ToeplitzSpec {
        &self.spec
    }

    pub fn extract(&self, bits: &BitSlice<u64, Lsb0>) -> Extracted {
        let n = self.spec.input_block_bits;
        let k = self.spec.output_block_bits;
        let blocks = bits.len() / n;
        let mut out = Bits::with_capacity(blocks * k);
        let mut x = alloc::vec![0u64; self.words_per_block];
        for block in bits.chunks_exact(n) {
            x.iter_mut().for_each(|w| *w = 0);
            for i in block.iter_ones() {
                x[i / 64] |= 1 << (i % 64);
            }
            for column in self.columns.chunks_exact(self.words_per_block) {
                let ones: u32 = column.iter().zip(&x).map(|(c, x)| (c & x).count_ones()).sum();
                out.push(ones & 1 == 1);
            }
        }
        Extracted {
            bits: out,
            discarded_bits: bits.len() - blocks * n,
        }
    }
}

pub fn toeplitz_extract(bits: &BitSlice<u64, Lsb0>, spec: &ToeplitzSpec) -> Extracted {
    ToeplitzExtractor::new(spec.clone()).extract(bits)
}

/// Parses a string of `0`/`1` characters; anything else is ignored.
pub fn bits_from_str(s: &str) -> Bits {
    s.chars()
        .filter_map(|c| match c {
            '0' => Some(false),
            '1' => Some(true),
            _ => None,
        })
        .collect()
}
