//! Photon statistics of ASE light.
//!
//! A single thermal mode follows the Bose–Einstein law
//! `P(n) = n̄ⁿ / (1 + n̄)^(1+n)`. With `M` independent modes of equal mean
//! occupation the count distribution becomes the M-fold degenerate form
//!
//! ```text
//!              Γ(n + M)
//! P(n) = ------------------ (1 + 1/n̄)^(-n) (1 + n̄)^(-M)
//!         Γ(n + 1) Γ(M)
//! ```
//!
//! which is a negative binomial with real shape `M`. Every evaluation here
//! runs in natural-log space and exponentiates only at the end: at the photon
//! numbers of interest (10⁴..10⁶) the linear form over- and underflows.

use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::{Error, Result};

/// Planck constant, J·s (CODATA 2018, exact).
pub const PLANCK: f64 = 6.626_070_15e-34;
/// Speed of light in vacuum, m/s (exact).
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Default two-sided tail mass discarded when truncating a distribution.
pub const DEFAULT_TAIL_TOLERANCE: f64 = 1e-12;

/// Below this optical/electrical bandwidth ratio the mode number is taken as
/// its analytic limit `s`.
const SMALL_RATIO: f64 = 1e-6;

/// Physical configuration of the source and detector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OpticalSetup {
    pub optical_bandwidth_hz: f64,
    pub electrical_bandwidth_hz: f64,
    /// 1 for polarized light, 2 for unpolarized.
    pub polarization_degeneracy: u8,
    pub optical_power_w: f64,
    pub center_wavelength_m: f64,
}

impl OpticalSetup {
    pub fn new(
        optical_bandwidth_hz: f64,
        electrical_bandwidth_hz: f64,
        polarization_degeneracy: u8,
        optical_power_w: f64,
        center_wavelength_m: f64,
    ) -> Result<Self> {
        let setup = OpticalSetup {
            optical_bandwidth_hz,
            electrical_bandwidth_hz,
            polarization_degeneracy,
            optical_power_w,
            center_wavelength_m,
        };
        setup.validate()?;
        Ok(setup)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.optical_bandwidth_hz > 0.0 && self.optical_bandwidth_hz.is_finite()) {
            return Err(Error::domain("optical_bandwidth_hz", "must be positive and finite"));
        }
        if !(self.electrical_bandwidth_hz > 0.0 && self.electrical_bandwidth_hz.is_finite()) {
            return Err(Error::domain("electrical_bandwidth_hz", "must be positive and finite"));
        }
        if !matches!(self.polarization_degeneracy, 1 | 2) {
            return Err(Error::domain("polarization_degeneracy", "must be 1 or 2"));
        }
        if !(self.optical_power_w >= 0.0 && self.optical_power_w.is_finite()) {
            return Err(Error::domain("optical_power_w", "must be non-negative and finite"));
        }
        if !(self.center_wavelength_m > 0.0 && self.center_wavelength_m.is_finite()) {
            return Err(Error::domain("center_wavelength_m", "must be positive and finite"));
        }
        Ok(())
    }

    /// Detection window `T = 1 / B_ele`.
    pub fn detection_window_s(&self) -> f64 {
        1.0 / self.electrical_bandwidth_hz
    }

    pub fn bandwidth_ratio(&self) -> f64 {
        self.optical_bandwidth_hz / self.electrical_bandwidth_hz
    }

    pub fn photon_energy_j(&self) -> f64 {
        PLANCK * SPEED_OF_LIGHT / self.center_wavelength_m
    }
}

/// Mode number together with the per-mode and total mean photon numbers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModalModel {
    pub mode_number: f64,
    pub mean_photons_per_mode: f64,
    pub mean_photons_total: f64,
}

impl ModalModel {
    pub fn new(mode_number: f64, mean_photons_per_mode: f64) -> Result<Self> {
        check_mode_number(mode_number)?;
        check_mean(mean_photons_per_mode)?;
        Ok(ModalModel {
            mode_number,
            mean_photons_per_mode,
            mean_photons_total: mode_number * mean_photons_per_mode,
        })
    }

    pub fn variance(&self) -> f64 {
        self.mean_photons_total * (1.0 + self.mean_photons_per_mode)
    }
}

fn check_mean(n_bar: f64) -> Result<()> {
    if n_bar >= 0.0 && n_bar.is_finite() {
        Ok(())
    } else {
        Err(Error::domain("n_bar", "mean photon number must be non-negative and finite"))
    }
}

fn check_mode_number(m: f64) -> Result<()> {
    if m > 0.0 && m.is_finite() {
        Ok(())
    } else {
        Err(Error::domain("mode_number", "must be positive and finite"))
    }
}

/// Single-mode Bose–Einstein probability of `n` photons.
pub fn bose_einstein_pmf(n: u64, n_bar: f64) -> Result<f64> {
    check_mean(n_bar)?;
    if n_bar == 0.0 {
        return Ok(if n == 0 { 1.0 } else { 0.0 });
    }
    let n = n as f64;
    Ok(libm::exp(n * libm::log(n_bar) - (1.0 + n) * libm::log1p(n_bar)))
}

/// Natural log of the degenerate Bose–Einstein pmf. Inputs are assumed valid
/// and `n_bar > 0`.
#[inline]
fn ln_degenerate(n: f64, n_bar: f64, m: f64, ln_gamma_m: f64) -> f64 {
    libm::lgamma(n + m) - libm::lgamma(n + 1.0) - ln_gamma_m
        - n * libm::log1p(1.0 / n_bar)
        - m * libm::log1p(n_bar)
}

/// M-fold degenerate Bose–Einstein probability of `n` photons; `m` may be any
/// positive real.
pub fn degenerate_be_pmf(n: u64, n_bar: f64, m: f64) -> Result<f64> {
    check_mean(n_bar)?;
    check_mode_number(m)?;
    if n_bar == 0.0 {
        return Ok(if n == 0 { 1.0 } else { 0.0 });
    }
    Ok(libm::exp(ln_degenerate(n as f64, n_bar, m, libm::lgamma(m))))
}

/// Effective number of independent modes for a Gaussian optical spectrum.
pub fn mode_number(setup: &OpticalSetup) -> Result<f64> {
    if !(setup.optical_bandwidth_hz > 0.0) {
        return Err(Error::domain("optical_bandwidth_hz", "must be positive"));
    }
    if !(setup.electrical_bandwidth_hz > 0.0) {
        return Err(Error::domain("electrical_bandwidth_hz", "must be positive"));
    }
    if !matches!(setup.polarization_degeneracy, 1 | 2) {
        return Err(Error::domain("polarization_degeneracy", "must be 1 or 2"));
    }
    Ok(mode_number_for_ratio(setup.bandwidth_ratio(), setup.polarization_degeneracy))
}

/// Mode number as a function of `r = B_opt / B_ele` and the polarization
/// degeneracy `s`. The caller guarantees `r > 0`.
pub fn mode_number_for_ratio(r: f64, s: u8) -> f64 {
    let s = f64::from(s);
    if r < SMALL_RATIO {
        return s;
    }
    let pr2 = PI * r * r;
    let denom = PI * r * libm::erf(libm::sqrt(PI) * r) + libm::expm1(-pr2);
    s * pr2 / denom
}

/// Mean photon numbers within one detection window, assuming equal
/// occupation of every mode.
pub fn mean_photons(setup: &OpticalSetup, mode_number: f64) -> Result<ModalModel> {
    setup.validate()?;
    check_mode_number(mode_number)?;
    let total = setup.optical_power_w * setup.detection_window_s() / setup.photon_energy_j();
    Ok(ModalModel {
        mode_number,
        mean_photons_per_mode: total / mode_number,
        mean_photons_total: total,
    })
}

/// Mode number and mean photon numbers straight from a setup.
pub fn modal_model(setup: &OpticalSetup) -> Result<ModalModel> {
    let m = mode_number(setup)?;
    mean_photons(setup, m)
}

/// A truncated, renormalized photon-count distribution over the contiguous
/// support `support_min ..= support_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhotonDistribution {
    support_min: u64,
    probabilities: Vec<f64>,
    log_probabilities: Vec<f64>,
    cumulative: Vec<f64>,
    truncated_mass: f64,
    model: Option<ModalModel>,
}

impl PhotonDistribution {
    /// Builds a distribution from explicit probabilities. They must be
    /// non-negative and sum to one within 1e-9; they are stored exactly as
    /// given.
    pub fn from_probabilities(support_min: u64, probabilities: Vec<f64>) -> Result<Self> {
        if probabilities.is_empty() {
            return Err(Error::Empty("probabilities"));
        }
        if probabilities.iter().any(|p| !(*p >= 0.0 && p.is_finite())) {
            return Err(Error::domain("probabilities", "must be non-negative and finite"));
        }
        let total: f64 = probabilities.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::Unnormalized(total));
        }
        let log_probabilities = probabilities.iter().map(|p| libm::log(*p)).collect();
        let cumulative = running_sum(&probabilities);
        Ok(PhotonDistribution {
            support_min,
            probabilities,
            log_probabilities,
            cumulative,
            truncated_mass: 0.0,
            model: None,
        })
    }

    pub fn point_mass(n: u64) -> Self {
        PhotonDistribution {
            support_min: n,
            probabilities: alloc::vec![1.0],
            log_probabilities: alloc::vec![0.0],
            cumulative: alloc::vec![1.0],
            truncated_mass: 0.0,
            model: None,
        }
    }

    pub fn support_min(&self) -> u64 {
        self.support_min
    }

    pub fn support_max(&self) -> u64 {
        self.support_min + self.probabilities.len() as u64 - 1
    }

    pub fn len(&self) -> usize {
        self.probabilities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probabilities.is_empty()
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn log_probabilities(&self) -> &[f64] {
        &self.log_probabilities
    }

    pub fn cumulative(&self) -> &[f64] {
        &self.cumulative
    }

    /// Upper bound on the probability mass outside the stored support, before
    /// renormalization. The bound is certified by the geometric decay of the
    /// tails rather than taken from `1 − Σp`, which at large counts is
    /// dominated by log-gamma round-off.
    pub fn truncated_mass(&self) -> f64 {
        self.truncated_mass
    }

    pub fn model(&self) -> Option<&ModalModel> {
        self.model.as_ref()
    }

    pub fn pmf(&self, n: u64) -> f64 {
        n.checked_sub(self.support_min)
            .and_then(|i| self.probabilities.get(i as usize))
            .copied()
            .unwrap_or(0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (u64, f64)> + '_ {
        (self.support_min..).zip(self.probabilities.iter().copied())
    }

    pub fn mean(&self) -> f64 {
        self.iter().map(|(n, p)| n as f64 * p).sum()
    }

    pub fn variance(&self) -> f64 {
        let mean = self.mean();
        self.iter()
            .map(|(n, p)| {
                let d = n as f64 - mean;
                d * d * p
            })
            .sum()
    }

    pub fn max_probability(&self) -> f64 {
        self.probabilities.iter().copied().fold(0.0, f64::max)
    }

    /// Most probable photon count (lowest one on ties).
    pub fn argmax(&self) -> u64 {
        let mut best = 0;
        for (i, p) in self.probabilities.iter().enumerate() {
            if *p > self.probabilities[best] {
                best = i;
            }
        }
        self.support_min + best as u64
    }
}

/// Compensated running sum; the last entry is pinned to exactly 1 when the
/// input is a normalized pmf so that inversion never falls off the end.
fn running_sum(probabilities: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(probabilities.len());
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for &p in probabilities {
        let t = sum + p;
        if sum.abs() >= p.abs() {
            comp += (sum - t) + p;
        } else {
            comp += (p - t) + sum;
        }
        sum = t;
        out.push(sum + comp);
    }
    if let Some(last) = out.last_mut() {
        if (*last - 1.0).abs() <= 1e-9 {
            *last = 1.0;
        }
    }
    out
}

/// Truncates and renormalizes the degenerate Bose–Einstein distribution of
/// `model`.
///
/// The support grows outward from the mode until a geometric bound on the
/// remaining mass of each tail drops below `tail_tolerance / 2`.
pub fn build_distribution(model: &ModalModel, tail_tolerance: f64) -> Result<PhotonDistribution> {
    if !(tail_tolerance > 0.0 && tail_tolerance <= 1e-6) {
        return Err(Error::domain("tail_tolerance", "must lie in (0, 1e-6]"));
    }
    let m = model.mode_number;
    let n_bar = model.mean_photons_per_mode;
    check_mode_number(m)?;
    check_mean(n_bar)?;
    if n_bar == 0.0 {
        let mut d = PhotonDistribution::point_mass(0);
        d.model = Some(*model);
        return Ok(d);
    }

    let half_tol = tail_tolerance / 2.0;
    let ln_gamma_m = libm::lgamma(m);
    let ln_p = |k: u64| ln_degenerate(k as f64, n_bar, m, ln_gamma_m);
    // q = P(k+1)/P(k) in the k → ∞ limit.
    let q = n_bar / (1.0 + n_bar);
    let up_ratio = |k: u64| (k as f64 + m) / (k as f64 + 1.0) * q;

    let mut mode = libm::floor(((m - 1.0) * n_bar).max(0.0)) as u64;
    while mode > 0 && up_ratio(mode - 1) < 1.0 {
        mode -= 1;
    }
    while up_ratio(mode) > 1.0 {
        mode += 1;
    }

    // Right tail: for k past the mode, P(k+j)/P(k+j-1) ≤ max(up_ratio(k), q) = ρ,
    // so the mass beyond k is at most P(k)·ρ/(1-ρ).
    let mut right = Vec::new();
    let mut right_bound;
    let mut k = mode;
    loop {
        let lp = ln_p(k);
        right.push(lp);
        let rho = up_ratio(k).max(q);
        if rho < 1.0 {
            right_bound = libm::exp(lp) * rho / (1.0 - rho);
            if right_bound < half_tol {
                break;
            }
        }
        k += 1;
    }

    // Left tail: P(j-1)/P(j) = j / ((j-1+M) q) grows with j when M ≥ 1, so the
    // mass below k is at most P(k)·σ/(1-σ) with σ taken at k. For M < 1 the
    // mode is 0 and there is no left tail.
    let mut left = Vec::new();
    let mut left_bound = 0.0;
    let mut k = mode;
    let mut lp = right[0];
    while k > 0 {
        let sigma = k as f64 / ((k as f64 - 1.0 + m) * q);
        if sigma < 1.0 {
            left_bound = libm::exp(lp) * sigma / (1.0 - sigma);
            if left_bound < half_tol {
                break;
            }
        }
        k -= 1;
        lp = ln_p(k);
        left.push(lp);
        left_bound = 0.0;
    }
    let support_min = k;

    let mut log_probabilities = Vec::with_capacity(left.len() + right.len());
    log_probabilities.extend(left.iter().rev());
    log_probabilities.extend(right);

    let probabilities: Vec<f64> = log_probabilities.iter().map(|lp| libm::exp(*lp)).collect();
    let raw_total = kahan_sum(&probabilities);
    let ln_total = libm::log(raw_total);
    let probabilities: Vec<f64> = probabilities.into_iter().map(|p| p / raw_total).collect();
    for lp in &mut log_probabilities {
        *lp -= ln_total;
    }
    let cumulative = running_sum(&probabilities);

    Ok(PhotonDistribution {
        support_min,
        probabilities,
        log_probabilities,
        cumulative,
        truncated_mass: left_bound + right_bound,
        model: Some(*model),
    })
}

fn kahan_sum(values: &[f64]) -> f64 {
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for &v in values {
        let y = v - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    sum
}
