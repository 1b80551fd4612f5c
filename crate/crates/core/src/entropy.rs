//! Min-entropy under finite detection resolution.
//!
//! With unlimited resolution every photon number is a distinct symbol and
//! the extractable randomness is `-log2 max P(n)`. A real acquisition chain
//! only changes its output level every `m` photons, so the observable
//! symbols are the blocks `[i·m, (i+1)·m − 1]` and their probabilities are
//! block sums of `P(n)`. The resolution is estimated from an acquired trace
//! as the mean spacing of its sorted distinct levels over the one-photon
//! voltage step `Δv₀`.

use alloc::vec::Vec;

use crate::detection::VoltageTrace;
use crate::error::{Error, Result};
use crate::histogram::{Histogram, Symbol};
use crate::photon::PhotonDistribution;

/// Bins used by [`gaussian_fit`].
pub const GAUSSIAN_FIT_BINS: usize = 100;
/// Minimum trace length accepted by [`gaussian_fit`].
pub const GAUSSIAN_FIT_MIN_SAMPLES: usize = 1000;

/// Something with a probability mass function.
pub trait ProbabilityMass {
    fn max_probability(&self) -> Option<f64>;
    fn total_probability(&self) -> f64;
}

impl ProbabilityMass for [f64] {
    fn max_probability(&self) -> Option<f64> {
        self.iter().copied().reduce(f64::max)
    }

    fn total_probability(&self) -> f64 {
        self.iter().sum()
    }
}

impl ProbabilityMass for PhotonDistribution {
    fn max_probability(&self) -> Option<f64> {
        self.probabilities().max_probability()
    }

    fn total_probability(&self) -> f64 {
        self.probabilities().total_probability()
    }
}

impl<T: Symbol> ProbabilityMass for Histogram<T> {
    fn max_probability(&self) -> Option<f64> {
        (!self.is_empty()).then(|| self.max_frequency())
    }

    fn total_probability(&self) -> f64 {
        if self.is_empty() {
            0.0
        } else {
            1.0
        }
    }
}

/// `-log2` of the largest probability.
pub fn min_entropy<P: ProbabilityMass + ?Sized>(pmf: &P) -> Result<f64> {
    let max = pmf.max_probability().ok_or(Error::Empty("pmf"))?;
    let total = pmf.total_probability();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::Unnormalized(total));
    }
    Ok(-libm::log2(max) + 0.0)
}

/// Photon pmf summed over resolution blocks. Level `i` covers the photon
/// counts `[i·m + offset, (i+1)·m + offset − 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct MergedDistribution {
    pub resolution: u64,
    pub offset: u64,
    pub first_level: i64,
    pub probabilities: Vec<f64>,
}

impl MergedDistribution {
    /// Inclusive photon-count range of level `level`.
    pub fn photon_range(&self, level: i64) -> (i64, i64) {
        let m = self.resolution as i64;
        let lo = level * m + self.offset as i64;
        (lo, lo + m - 1)
    }

    pub fn iter(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        (self.first_level..).zip(self.probabilities.iter().copied())
    }
}

impl ProbabilityMass for MergedDistribution {
    fn max_probability(&self) -> Option<f64> {
        self.probabilities.max_probability()
    }

    fn total_probability(&self) -> f64 {
        self.probabilities.total_probability()
    }
}

/// Blocks anchored at photon count 0.
pub fn merge_distribution(pmf: &PhotonDistribution, m: u64) -> Result<MergedDistribution> {
    merge_distribution_with_offset(pmf, m, 0)
}

/// As [`merge_distribution`] with the block grid shifted by `offset` photons.
pub fn merge_distribution_with_offset(
    pmf: &PhotonDistribution,
    m: u64,
    offset: u64,
) -> Result<MergedDistribution> {
    if m == 0 {
        return Err(Error::domain("resolution_m", "must be at least 1"));
    }
    let level_of = |n: u64| (n as i64 - offset as i64).div_euclid(m as i64);
    let first_level = level_of(pmf.support_min());
    if m == 1 {
        return Ok(MergedDistribution {
            resolution: 1,
            offset,
            first_level,
            probabilities: pmf.probabilities().to_vec(),
        });
    }
    let last_level = level_of(pmf.support_max());
    let mut probabilities = alloc::vec![0.0; (last_level - first_level + 1) as usize];
    for (n, p) in pmf.iter() {
        probabilities[(level_of(n) - first_level) as usize] += p;
    }
    Ok(MergedDistribution {
        resolution: m,
        offset,
        first_level,
        probabilities,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResolutionEstimate {
    pub resolution_m: u64,
    pub delta_v0: f64,
    pub mean_unique_gap: f64,
}

impl ResolutionEstimate {
    /// `m = ⌈gap / Δv₀⌉`. Ratios within 1e-9 (relative) of an integer are
    /// snapped to it first, so a gap that is an exact multiple of `Δv₀` up to
    /// float round-off gives that multiple.
    pub fn from_mean_gap(mean_unique_gap: f64, delta_v0: f64) -> Result<Self> {
        if !(delta_v0 > 0.0 && delta_v0.is_finite()) {
            return Err(Error::domain("delta_v0", "must be positive and finite"));
        }
        if !(mean_unique_gap > 0.0 && mean_unique_gap.is_finite()) {
            return Err(Error::domain("mean_unique_gap", "must be positive and finite"));
        }
        let ratio = mean_unique_gap / delta_v0;
        let nearest = libm::round(ratio);
        let m = if nearest >= 1.0 && libm::fabs(ratio - nearest) <= 1e-9 * nearest {
            nearest
        } else {
            libm::ceil(ratio)
        };
        Ok(ResolutionEstimate {
            resolution_m: (m as u64).max(1),
            delta_v0,
            mean_unique_gap,
        })
    }
}

impl ResolutionEstimate {
    /// A resolution known in advance; the gap is recorded as `m·Δv₀`.
    pub fn fixed(resolution_m: u64, delta_v0: f64) -> Result<Self> {
        if resolution_m == 0 {
            return Err(Error::domain("resolution_m", "must be at least 1"));
        }
        Self::from_mean_gap(resolution_m as f64 * delta_v0, delta_v0)
            .map(|r| ResolutionEstimate { resolution_m, ..r })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ResolutionOptions {
    /// Fraction of the sorted gaps dropped from each end before averaging.
    /// Zero averages every gap.
    pub trim_fraction: f64,
}

pub fn estimate_resolution(trace: &VoltageTrace, delta_v0: f64) -> Result<ResolutionEstimate> {
    estimate_resolution_with(trace, delta_v0, &ResolutionOptions::default())
}

pub fn estimate_resolution_with(
    trace: &VoltageTrace,
    delta_v0: f64,
    options: &ResolutionOptions,
) -> Result<ResolutionEstimate> {
    if !(delta_v0 > 0.0 && delta_v0.is_finite()) {
        return Err(Error::domain("delta_v0", "must be positive and finite"));
    }
    if !(0.0..0.5).contains(&options.trim_fraction) {
        return Err(Error::domain("trim_fraction", "must lie in [0, 0.5)"));
    }
    let mut levels: Vec<f64> = trace.samples().iter().map(|v| v + 0.0).collect();
    levels.sort_unstable_by(f64::total_cmp);
    levels.dedup();
    if levels.len() < 2 {
        return Err(Error::domain("trace", "needs at least two distinct values"));
    }
    let mut gaps: Vec<f64> = levels.windows(2).map(|w| w[1] - w[0]).collect();
    let gaps = if options.trim_fraction > 0.0 {
        gaps.sort_unstable_by(f64::total_cmp);
        let cut = libm::floor(gaps.len() as f64 * options.trim_fraction) as usize;
        &gaps[cut..gaps.len() - cut]
    } else {
        &gaps[..]
    };
    let mean_gap = gaps.iter().sum::<f64>() / gaps.len() as f64;
    ResolutionEstimate::from_mean_gap(mean_gap, delta_v0)
}

/// Min-entropy of the distinct voltage values of a trace, each distinct
/// value being one symbol.
pub fn empirical_min_entropy(trace: &VoltageTrace) -> Result<f64> {
    min_entropy(&Histogram::from_values(trace.samples())?)
}

/// Maps every sample to `floor(v / width)·width`.
pub fn quantize_trace(trace: &VoltageTrace, level_width: f64) -> Result<VoltageTrace> {
    if !(level_width > 0.0 && level_width.is_finite()) {
        return Err(Error::domain("level_width", "must be positive and finite"));
    }
    let samples = trace
        .samples()
        .iter()
        .map(|v| libm::floor(v / level_width) * level_width + 0.0)
        .collect();
    VoltageTrace::new(samples, trace.sample_rate_hz(), trace.label())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianFit {
    pub mean: f64,
    pub std_dev: f64,
    /// Total variation distance between the binned trace and the fitted
    /// Gaussian.
    pub fit_distance: f64,
}

pub fn gaussian_fit(trace: &VoltageTrace) -> Result<GaussianFit> {
    gaussian_fit_with_bins(trace, GAUSSIAN_FIT_BINS)
}

/// Moment-matched Gaussian. The trace range `[min, max]` is split into `bins`
/// equal bins; the outermost bins extend to ±∞ on the Gaussian side so both
/// histograms carry unit mass.
pub fn gaussian_fit_with_bins(trace: &VoltageTrace, bins: usize) -> Result<GaussianFit> {
    if trace.len() < GAUSSIAN_FIT_MIN_SAMPLES {
        return Err(Error::domain("trace", "Gaussian fit needs at least 1000 samples"));
    }
    if bins == 0 {
        return Err(Error::domain("bins", "must be at least 1"));
    }
    let mean = trace.mean();
    let std_dev = trace.std_dev();
    if !(std_dev > 0.0) {
        return Err(Error::domain("trace", "zero variance; no Gaussian to fit"));
    }
    let samples = trace.samples();
    let (lo, hi) = samples
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(*v), hi.max(*v)));
    let width = (hi - lo) / bins as f64;
    let mut counts = alloc::vec![0u64; bins];
    for v in samples {
        let i = (((v - lo) / width) as usize).min(bins - 1);
        counts[i] += 1;
    }
    let normal_cdf = |x: f64| 0.5 * libm::erfc(-(x - mean) / (std_dev * core::f64::consts::SQRT_2));
    let n = samples.len() as f64;
    let mut previous = 0.0;
    let mut distance = 0.0;
    for (i, count) in counts.iter().enumerate() {
        let upper = if i + 1 == bins {
            1.0
        } else {
            normal_cdf(lo + (i + 1) as f64 * width)
        };
        distance += libm::fabs(*count as f64 / n - (upper - previous));
        previous = upper;
    }
    Ok(GaussianFit {
        mean,
        std_dev,
        fit_distance: 0.5 * distance,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntropyReport {
    pub h_theoretical: f64,
    pub h_merged: f64,
    pub h_empirical: f64,
    /// `(h_merged − h_empirical) / h_empirical`.
    pub deviation: f64,
    pub resolution: ResolutionEstimate,
    pub sample_rate_hz: f64,
    pub equivalent_rate_bits_per_s: f64,
}

/// Full quantification: resolution from the trace, merged and unmerged
/// theoretical min-entropy, empirical min-entropy of the trace.
pub fn build_report(
    pmf: &PhotonDistribution,
    trace: &VoltageTrace,
    delta_v0: f64,
) -> Result<EntropyReport> {
    build_report_with(pmf, trace, delta_v0, &ResolutionOptions::default())
}

pub fn build_report_with(
    pmf: &PhotonDistribution,
    trace: &VoltageTrace,
    delta_v0: f64,
    options: &ResolutionOptions,
) -> Result<EntropyReport> {
    let resolution = estimate_resolution_with(trace, delta_v0, options)?;
    build_report_at(pmf, trace, resolution)
}

/// Report at a resolution fixed in advance, e.g. when the acquisition grid is
/// known rather than estimated from the trace.
pub fn build_report_at(
    pmf: &PhotonDistribution,
    trace: &VoltageTrace,
    resolution: ResolutionEstimate,
) -> Result<EntropyReport> {
    let merged = merge_distribution(pmf, resolution.resolution_m)?;
    let h_theoretical = min_entropy(pmf)?;
    let h_merged = min_entropy(&merged)?;
    let h_empirical = empirical_min_entropy(trace)?;
    if h_empirical == 0.0 {
        return Err(Error::domain("trace", "single-level trace has zero empirical min-entropy"));
    }
    let sample_rate_hz = trace.sample_rate_hz();
    Ok(EntropyReport {
        h_theoretical,
        h_merged,
        h_empirical,
        deviation: (h_merged - h_empirical) / h_empirical,
        resolution,
        sample_rate_hz,
        equivalent_rate_bits_per_s: h_merged * sample_rate_hz,
    })
}
