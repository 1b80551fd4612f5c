//! Photodetector and oscilloscope model.
//!
//! Each detection window converts its photon count `n` to a voltage
//! `v = c·n + e`: `c` is a single calibrated coefficient absorbing the
//! photodiode responsivity and the acquisition gain, and `e` is electronic
//! noise independent of the optical signal.

use alloc::string::String;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::photon::{self, ModalModel, OpticalSetup, PhotonDistribution};
use crate::rng;
use crate::sampling::{self, PhotonCountTrace, SampleRequest};

/// Oscilloscope sampling rate used when none is given, samples/s.
pub const DEFAULT_SAMPLE_RATE_HZ: f64 = 10e9;
/// Minimum length of a measured noise trace used in simulation.
pub const MIN_MEASURED_NOISE_SAMPLES: usize = 10_000;

/// Acquired or simulated voltages at a fixed sample rate.
#[derive(Debug, Clone, PartialEq)]
pub struct VoltageTrace {
    samples: Vec<f64>,
    sample_rate_hz: f64,
    label: String,
}

impl VoltageTrace {
    pub fn new(samples: Vec<f64>, sample_rate_hz: f64, label: impl Into<String>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::Empty("voltage trace"));
        }
        if !(sample_rate_hz > 0.0 && sample_rate_hz.is_finite()) {
            return Err(Error::domain("sample_rate_hz", "must be positive and finite"));
        }
        Ok(VoltageTrace {
            samples,
            sample_rate_hz,
            label: label.into(),
        })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.sample_rate_hz
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.samples.iter().sum::<f64>() / self.samples.len() as f64
    }

    /// Sample standard deviation (n − 1 denominator).
    pub fn std_dev(&self) -> f64 {
        let n = self.samples.len();
        if n < 2 {
            return 0.0;
        }
        let mean = self.mean();
        let ss: f64 = self.samples.iter().map(|v| (v - mean) * (v - mean)).sum();
        libm::sqrt(ss / (n - 1) as f64)
    }
}

/// Linear photon-number → voltage mapping.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectionCalibration {
    pub volts_per_photon: f64,
    /// Largest `|v̄ − c·n| / v̄` over the source points.
    pub fit_residual_relative_max: f64,
    /// `(photon count, mean voltage)` pairs the coefficient was fitted to.
    pub source_points: Vec<(f64, f64)>,
}

impl DetectionCalibration {
    /// A calibration given directly by its coefficient.
    pub fn from_coefficient(volts_per_photon: f64) -> Result<Self> {
        if !(volts_per_photon > 0.0 && volts_per_photon.is_finite()) {
            return Err(Error::domain("volts_per_photon", "must be positive and finite"));
        }
        Ok(DetectionCalibration {
            volts_per_photon,
            fit_residual_relative_max: 0.0,
            source_points: Vec::new(),
        })
    }

    /// Voltage step produced by one extra photon, `g(n+1) − g(n)`.
    pub fn delta_v0(&self) -> f64 {
        self.volts_per_photon
    }

    pub fn voltage(&self, photons: u64) -> f64 {
        self.volts_per_photon * photons as f64
    }
}

/// Least-squares fit of `v̄ = c·n` through the origin.
pub fn calibrate_mapping(points: &[(f64, f64)]) -> Result<DetectionCalibration> {
    if points.is_empty() {
        return Err(Error::Empty("calibration points"));
    }
    for &(n, v) in points {
        if !(n > 0.0 && n.is_finite()) {
            return Err(Error::domain("photon_count", "must be positive and finite"));
        }
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::domain("mean_voltage_v", "must be positive and finite"));
        }
    }
    let sxy: f64 = points.iter().map(|(n, v)| n * v).sum();
    let sxx: f64 = points.iter().map(|(n, _)| n * n).sum();
    let c = sxy / sxx;
    let residual = points
        .iter()
        .map(|(n, v)| libm::fabs(v - c * n) / v)
        .fold(0.0, f64::max);
    Ok(DetectionCalibration {
        volts_per_photon: c,
        fit_residual_relative_max: residual,
        source_points: points.to_vec(),
    })
}

pub fn photons_to_voltage(
    trace: &PhotonCountTrace,
    calibration: &DetectionCalibration,
    sample_rate_hz: f64,
) -> Result<VoltageTrace> {
    let c = calibration.volts_per_photon;
    let samples = trace.counts.iter().map(|n| c * *n as f64).collect();
    VoltageTrace::new(samples, sample_rate_hz, "photon")
}

/// Where the additive electronic noise comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum ElectronicNoiseSource {
    /// A trace recorded with the optical source switched off.
    Measured(VoltageTrace),
    /// Gaussian noise; `mean_v` doubles as a DC offset.
    Synthetic {
        mean_v: f64,
        std_dev_v: f64,
        seed: u64,
    },
}

impl ElectronicNoiseSource {
    pub fn gaussian(mean_v: f64, std_dev_v: f64, seed: u64) -> Result<Self> {
        let source = ElectronicNoiseSource::Synthetic {
            mean_v,
            std_dev_v,
            seed,
        };
        source.validate()?;
        Ok(source)
    }

    pub fn silent() -> Self {
        ElectronicNoiseSource::Synthetic {
            mean_v: 0.0,
            std_dev_v: 0.0,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ElectronicNoiseSource::Measured(trace) if trace.is_empty() => {
                Err(Error::Empty("noise trace"))
            }
            ElectronicNoiseSource::Measured(_) => Ok(()),
            ElectronicNoiseSource::Synthetic {
                mean_v, std_dev_v, ..
            } => {
                if !mean_v.is_finite() {
                    return Err(Error::domain("noise_mean_v", "must be finite"));
                }
                if !(*std_dev_v >= 0.0 && std_dev_v.is_finite()) {
                    return Err(Error::domain("noise_std_v", "must be non-negative and finite"));
                }
                Ok(())
            }
        }
    }

    /// Validation for use inside a full simulation, which also requires a
    /// measured trace to be long enough to represent the noise marginal.
    pub fn validate_for_simulation(&self) -> Result<()> {
        self.validate()?;
        if let ElectronicNoiseSource::Measured(trace) = self {
            if trace.len() < MIN_MEASURED_NOISE_SAMPLES {
                return Err(Error::domain(
                    "noise_file",
                    "measured noise trace needs at least 10000 samples",
                ));
            }
        }
        Ok(())
    }
}

/// Adds electronic noise sample by sample.
///
/// A measured trace at least as long as the input is added index by index; a
/// shorter one is resampled with replacement.
pub fn add_electronic_noise(
    photon_voltages: &VoltageTrace,
    noise: &ElectronicNoiseSource,
    seed: u64,
) -> Result<VoltageTrace> {
    noise.validate()?;
    let input = photon_voltages.samples();
    let samples: Vec<f64> = match noise {
        ElectronicNoiseSource::Measured(trace) => {
            let noise = trace.samples();
            if noise.len() >= input.len() {
                input.iter().zip(noise).map(|(v, e)| v + e).collect()
            } else {
                let mut rng = rng::stream(seed, rng::NOISE_STREAM);
                input
                    .iter()
                    .map(|v| v + noise[rng.random_range(0..noise.len())])
                    .collect()
            }
        }
        ElectronicNoiseSource::Synthetic {
            mean_v,
            std_dev_v,
            seed: source_seed,
        } => {
            if *std_dev_v == 0.0 && *mean_v == 0.0 {
                input.to_vec()
            } else {
                let mut rng = rng::stream(rng::mix_seeds(seed, *source_seed), rng::NOISE_STREAM);
                input
                    .iter()
                    .map(|v| {
                        let z: f64 = rng.sample(StandardNormal);
                        v + (mean_v + std_dev_v * z)
                    })
                    .collect()
            }
        }
    };
    VoltageTrace::new(
        samples,
        photon_voltages.sample_rate_hz(),
        photon_voltages.label(),
    )
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimulationOptions {
    pub tail_tolerance: f64,
    pub sample_rate_hz: f64,
    pub chunk_size: usize,
}

impl Default for SimulationOptions {
    fn default() -> Self {
        SimulationOptions {
            tail_tolerance: photon::DEFAULT_TAIL_TOLERANCE,
            sample_rate_hz: DEFAULT_SAMPLE_RATE_HZ,
            chunk_size: sampling::DEFAULT_CHUNK_SIZE,
        }
    }
}

/// Intermediate products of a simulated acquisition.
#[derive(Debug, Clone)]
pub struct AseSimulation {
    pub model: ModalModel,
    pub distribution: PhotonDistribution,
    pub trace: VoltageTrace,
}

/// Mode number, mean photon numbers and the truncated count distribution for
/// a setup.
pub fn prepare_distribution(
    setup: &OpticalSetup,
    tail_tolerance: f64,
) -> Result<(ModalModel, PhotonDistribution)> {
    let model = photon::modal_model(setup)?;
    let distribution = photon::build_distribution(&model, tail_tolerance)?;
    Ok((model, distribution))
}

/// Detection half of the pipeline: counts → voltages → plus noise.
pub fn detect(
    counts: &PhotonCountTrace,
    calibration: &DetectionCalibration,
    noise: &ElectronicNoiseSource,
    seed: u64,
    sample_rate_hz: f64,
) -> Result<VoltageTrace> {
    let photon_voltages = photons_to_voltage(counts, calibration, sample_rate_hz)?;
    Ok(add_electronic_noise(&photon_voltages, noise, seed)?.with_label("simulated"))
}

pub fn simulate_ase_experiment_with(
    setup: &OpticalSetup,
    calibration: &DetectionCalibration,
    noise: &ElectronicNoiseSource,
    count: usize,
    seed: u64,
    options: &SimulationOptions,
) -> Result<AseSimulation> {
    noise.validate_for_simulation()?;
    let (model, distribution) = prepare_distribution(setup, options.tail_tolerance)?;
    let request = SampleRequest::new(&distribution, count, seed).with_chunk_size(options.chunk_size);
    let counts = sampling::inverse_transform_sample(&request)?;
    let trace = detect(&counts, calibration, noise, seed, options.sample_rate_hz)?;
    Ok(AseSimulation {
        model,
        distribution,
        trace,
    })
}

/// Comprehensive simulated trace `V_com = c·N + V_ele` for a setup.
pub fn simulate_ase_experiment(
    setup: &OpticalSetup,
    calibration: &DetectionCalibration,
    noise: &ElectronicNoiseSource,
    count: usize,
    seed: u64,
) -> Result<VoltageTrace> {
    simulate_ase_experiment_with(
        setup,
        calibration,
        noise,
        count,
        seed,
        &SimulationOptions::default(),
    )
    .map(|sim| sim.trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn counts(v: Vec<u64>) -> PhotonCountTrace {
        PhotonCountTrace::new(v).unwrap()
    }

    #[test]
    fn single_point_calibration() {
        let cal = calibrate_mapping(&[(100.0, 1e-6)]).unwrap();
        assert!((cal.volts_per_photon - 1e-8).abs() < 1e-22);
        assert!(cal.fit_residual_relative_max < 1e-12);
    }

    #[test]
    fn exact_line_is_recovered() {
        let points: Vec<(f64, f64)> = [1e3, 5e4, 2e5, 1e6]
            .iter()
            .map(|n| (*n, 5e-8 * n))
            .collect();
        let cal = calibrate_mapping(&points).unwrap();
        assert!((cal.volts_per_photon / 5e-8 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn calibration_rejects_bad_points() {
        assert_eq!(calibrate_mapping(&[]), Err(Error::Empty("calibration points")));
        assert!(matches!(
            calibrate_mapping(&[(0.0, 1.0)]),
            Err(Error::Domain { field: "photon_count", .. })
        ));
        assert!(matches!(
            calibrate_mapping(&[(1.0, -1.0)]),
            Err(Error::Domain { field: "mean_voltage_v", .. })
        ));
    }

    #[test]
    fn photon_voltages() {
        let cal = DetectionCalibration::from_coefficient(2.968e-8).unwrap();
        let v = photons_to_voltage(&counts(vec![0, 0, 0]), &cal, 1e10).unwrap();
        assert_eq!(v.samples(), &[0.0, 0.0, 0.0]);
        let v = photons_to_voltage(&counts(vec![47130]), &cal, 1e10).unwrap();
        assert!((v.samples()[0] / 1.3988e-3 - 1.0).abs() < 1e-4);
        assert!((v.samples()[0] / 1.3963e-3 - 1.0).abs() < 2e-3);
    }

    #[test]
    fn silent_noise_is_identity() {
        let input = VoltageTrace::new(vec![1e-3, 2e-3, -5e-4], 1e10, "x").unwrap();
        let out = add_electronic_noise(&input, &ElectronicNoiseSource::silent(), 5).unwrap();
        assert_eq!(out.samples(), input.samples());
    }

    #[test]
    fn constant_measured_noise_is_resampled() {
        let input = VoltageTrace::new(vec![0.0, 1e-3, 2e-3, 3e-3], 1e10, "x").unwrap();
        let noise = ElectronicNoiseSource::Measured(VoltageTrace::new(vec![1e-4], 1e10, "n").unwrap());
        let out = add_electronic_noise(&input, &noise, 5).unwrap();
        for (o, i) in out.samples().iter().zip(input.samples()) {
            assert_eq!(*o, i + 1e-4);
        }
    }

    #[test]
    fn long_measured_noise_is_aligned() {
        let input = VoltageTrace::new(vec![1.0, 2.0], 1e10, "x").unwrap();
        let noise =
            ElectronicNoiseSource::Measured(VoltageTrace::new(vec![0.5, 0.25, 9.0], 1e10, "n").unwrap());
        let out = add_electronic_noise(&input, &noise, 0).unwrap();
        assert_eq!(out.samples(), &[1.5, 2.25]);
    }

    #[test]
    fn short_measured_noise_rejected_in_simulation() {
        let noise =
            ElectronicNoiseSource::Measured(VoltageTrace::new(vec![0.0; 100], 1e10, "n").unwrap());
        assert!(noise.validate_for_simulation().is_err());
        assert!(ElectronicNoiseSource::gaussian(0.0, -1.0, 0).is_err());
    }

    #[test]
    fn zero_power_zero_noise_simulation() {
        let setup = OpticalSetup::new(13e9, 5e9, 1, 0.0, 1550e-9).unwrap();
        let cal = DetectionCalibration::from_coefficient(2.968e-8).unwrap();
        let trace =
            simulate_ase_experiment(&setup, &cal, &ElectronicNoiseSource::silent(), 1000, 1).unwrap();
        assert!(trace.samples().iter().all(|v| *v == 0.0));
    }
}
