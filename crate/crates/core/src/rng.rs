//! Seeded random streams.
//!
//! All randomness comes from ChaCha8 keyed by a 64-bit seed. ChaCha is a
//! counter-mode generator, so the stream can be positioned at any word,
//! which is what makes chunked generation independent of chunk size.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream used for photon-count uniforms.
pub const PHOTON_STREAM: u64 = 0;
/// Stream used for electronic noise.
pub const NOISE_STREAM: u64 = 1;
/// Stream used for Toeplitz seed generation.
pub const EXTRACTOR_STREAM: u64 = 2;

pub fn stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Combines two seeds into one (splitmix64 finalizer over a xor-shifted pair).
pub fn mix_seeds(a: u64, b: u64) -> u64 {
    let mut z = a ^ b.rotate_left(32) ^ 0x9E37_79B9_7F4A_7C15;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Maps 64 random bits to a uniform double in the open interval (0, 1).
///
/// Uses the top 52 bits and centres the value inside its grid cell, so the
/// smallest output is 2^-53 and the largest is 1 - 2^-53, both exact.
#[inline]
pub fn open_unit(bits: u64) -> f64 {
    const SCALE: f64 = 1.0 / (1u64 << 52) as f64;
    ((bits >> 12) as f64 + 0.5) * SCALE
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn open_unit_excludes_endpoints() {
        assert!(open_unit(0) > 0.0);
        assert!(open_unit(u64::MAX) < 1.0);
        assert_eq!(open_unit(0), 2f64.powi(-53));
        assert_eq!(open_unit(u64::MAX), 1.0 - 2f64.powi(-53));
    }

    #[test]
    fn mixing_is_not_symmetric() {
        assert_ne!(mix_seeds(1, 2), mix_seeds(2, 1));
        assert_ne!(mix_seeds(0, 0), 0);
    }
}
