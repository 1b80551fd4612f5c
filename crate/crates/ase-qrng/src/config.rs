//! `key = value` experiment configuration.
//!
//! ```text
//! # setup
//! optical_bandwidth_hz    = 13e9
//! electrical_bandwidth_hz = 5e9
//! polarization_degeneracy = 1
//! optical_power_w         = 33e-6
//! center_wavelength_m     = 1550e-9
//! # noise: either noise_file, or noise_std_v [noise_mean_v] [noise_seed]
//! noise_std_v             = 7.5e-7
//! # calibration: either calibration_file or volts_per_photon
//! volts_per_photon        = 2.968e-8
//! sample_count            = 10000000
//! master_seed             = 1
//! outputs                 = out/row1
//! ```
//!
//! Optional keys: `tail_tolerance`, `sample_rate_hz`, `quantization_m`
//! (acquisition grid in photons; the trace is floored to multiples of
//! `quantization_m·Δv₀`), `resolution_m` (fixes the resolution instead of
//! estimating it), `resolution_trim`, `plot_bins`, `label`. Relative paths
//! resolve against the directory holding the config file.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use ase_qrng_core::detection::{
    calibrate_mapping, DetectionCalibration, ElectronicNoiseSource, DEFAULT_SAMPLE_RATE_HZ,
};
use ase_qrng_core::photon::{OpticalSetup, DEFAULT_TAIL_TOLERANCE};

use crate::error::{AppError, Result};
use crate::formats;

pub const DEFAULT_SAMPLE_COUNT: usize = 10_000_000;

pub const KNOWN_KEYS: &[&str] = &[
    "optical_bandwidth_hz",
    "electrical_bandwidth_hz",
    "polarization_degeneracy",
    "optical_power_w",
    "center_wavelength_m",
    "noise_file",
    "noise_mean_v",
    "noise_std_v",
    "noise_seed",
    "calibration_file",
    "volts_per_photon",
    "sample_count",
    "master_seed",
    "tail_tolerance",
    "sample_rate_hz",
    "outputs",
    "quantization_m",
    "resolution_m",
    "resolution_trim",
    "plot_bins",
    "label",
];

#[derive(Debug, Clone, PartialEq)]
pub enum NoiseSpec {
    File(PathBuf),
    Synthetic { mean_v: f64, std_dev_v: f64, seed: u64 },
}

#[derive(Debug, Clone, PartialEq)]
pub enum CalibrationSpec {
    File(PathBuf),
    Coefficient(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub setup: OpticalSetup,
    pub noise: NoiseSpec,
    pub calibration: CalibrationSpec,
    pub sample_count: usize,
    pub master_seed: u64,
    pub tail_tolerance: f64,
    pub sample_rate_hz: f64,
    pub outputs: PathBuf,
    pub quantization_m: Option<u64>,
    pub resolution_m: Option<u64>,
    pub resolution_trim: f64,
    pub plot_bins: Option<usize>,
    pub label: String,
    /// SHA-256 of the text the config was parsed from.
    pub source_sha256: String,
}

struct Entries<'a> {
    values: BTreeMap<&'a str, &'a str>,
}

impl<'a> Entries<'a> {
    fn raw(&self, key: &str) -> Option<&'a str> {
        self.values.get(key).copied()
    }

    fn parse<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        self.raw(key)
            .map(|v| {
                v.parse::<T>()
                    .map_err(|_| AppError::config(key, format!("cannot parse {v:?}")))
            })
            .transpose()
    }

    fn required<T: FromStr>(&self, key: &str) -> Result<T> {
        self.parse(key)?
            .ok_or_else(|| AppError::config(key, "missing required key"))
    }

    fn float(&self, key: &str) -> Result<Option<f64>> {
        match self.parse::<f64>(key)? {
            Some(v) if !v.is_finite() => Err(AppError::config(key, "must be finite")),
            other => Ok(other),
        }
    }

    fn required_float(&self, key: &str) -> Result<f64> {
        self.float(key)?
            .ok_or_else(|| AppError::config(key, "missing required key"))
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| AppError::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base)
    }

    /// Parses config text; relative paths are joined onto `base_dir`.
    pub fn parse(text: &str, base_dir: &Path) -> Result<Self> {
        let mut values = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| AppError::parse("<config>", i + 1, "expected 'key = value'"))?;
            let (k, v) = (k.trim(), v.trim());
            if !KNOWN_KEYS.contains(&k) {
                return Err(AppError::config(k, "unknown key"));
            }
            if values.insert(k, v).is_some() {
                return Err(AppError::config(k, "duplicate key"));
            }
        }
        let e = Entries { values };
        let path = |key: &str| e.raw(key).map(|v| base_dir.join(v));

        let setup = OpticalSetup::new(
            e.required_float("optical_bandwidth_hz")?,
            e.required_float("electrical_bandwidth_hz")?,
            e.required("polarization_degeneracy")?,
            e.required_float("optical_power_w")?,
            e.required_float("center_wavelength_m")?,
        )?;

        let noise = match (path("noise_file"), e.float("noise_std_v")?) {
            (Some(_), Some(_)) => {
                return Err(AppError::config("noise_file", "give either noise_file or noise_std_v, not both"))
            }
            (Some(file), None) => NoiseSpec::File(file),
            (None, Some(std_dev_v)) => NoiseSpec::Synthetic {
                mean_v: e.float("noise_mean_v")?.unwrap_or(0.0),
                std_dev_v,
                seed: e.parse("noise_seed")?.unwrap_or(0),
            },
            (None, None) => return Err(AppError::config("noise_std_v", "missing noise_file or noise_std_v")),
        };

        let calibration = match (path("calibration_file"), e.float("volts_per_photon")?) {
            (Some(_), Some(_)) => {
                return Err(AppError::config(
                    "calibration_file",
                    "give either calibration_file or volts_per_photon, not both",
                ))
            }
            (Some(file), None) => CalibrationSpec::File(file),
            (None, Some(c)) => CalibrationSpec::Coefficient(c),
            (None, None) => {
                return Err(AppError::config("volts_per_photon", "missing calibration_file or volts_per_photon"))
            }
        };

        let config = ExperimentConfig {
            setup,
            noise,
            calibration,
            sample_count: e.parse("sample_count")?.unwrap_or(DEFAULT_SAMPLE_COUNT),
            master_seed: e.required("master_seed")?,
            tail_tolerance: e.float("tail_tolerance")?.unwrap_or(DEFAULT_TAIL_TOLERANCE),
            sample_rate_hz: e.float("sample_rate_hz")?.unwrap_or(DEFAULT_SAMPLE_RATE_HZ),
            outputs: path("outputs").ok_or_else(|| AppError::config("outputs", "missing required key"))?,
            quantization_m: e.parse("quantization_m")?,
            resolution_m: e.parse("resolution_m")?,
            resolution_trim: e.float("resolution_trim")?.unwrap_or(0.0),
            plot_bins: e.parse("plot_bins")?,
            label: e.raw("label").unwrap_or("simulated").to_owned(),
            source_sha256: formats::sha256_hex(text.as_bytes()),
        };
        config.validate()?;
        Ok(config)
    }

    /// Range checks that do not touch the file system.
    pub fn validate(&self) -> Result<()> {
        self.setup.validate()?;
        if self.sample_count < 1 {
            return Err(AppError::config("sample_count", "must be at least 1"));
        }
        if !(self.tail_tolerance > 0.0 && self.tail_tolerance <= 1e-6) {
            return Err(AppError::config("tail_tolerance", "must lie in (0, 1e-6]"));
        }
        if !(self.sample_rate_hz > 0.0) {
            return Err(AppError::config("sample_rate_hz", "must be positive"));
        }
        if self.quantization_m == Some(0) {
            return Err(AppError::config("quantization_m", "must be at least 1"));
        }
        if self.resolution_m == Some(0) {
            return Err(AppError::config("resolution_m", "must be at least 1"));
        }
        if !(0.0..0.5).contains(&self.resolution_trim) {
            return Err(AppError::config("resolution_trim", "must lie in [0, 0.5)"));
        }
        if self.plot_bins == Some(0) {
            return Err(AppError::config("plot_bins", "must be at least 1"));
        }
        if let NoiseSpec::Synthetic { mean_v, std_dev_v, seed } = self.noise {
            ElectronicNoiseSource::gaussian(mean_v, std_dev_v, seed)?;
        }
        if let CalibrationSpec::Coefficient(c) = self.calibration {
            DetectionCalibration::from_coefficient(c)?;
        }
        Ok(())
    }

    /// Reads the noise trace if one is referenced.
    pub fn load_noise(&self) -> Result<ElectronicNoiseSource> {
        let source = match &self.noise {
            NoiseSpec::File(path) => ElectronicNoiseSource::Measured(formats::read_voltage_trace(path)?),
            NoiseSpec::Synthetic { mean_v, std_dev_v, seed } => {
                ElectronicNoiseSource::gaussian(*mean_v, *std_dev_v, *seed)?
            }
        };
        source.validate_for_simulation()?;
        Ok(source)
    }

    pub fn load_calibration(&self) -> Result<DetectionCalibration> {
        match &self.calibration {
            CalibrationSpec::File(path) => Ok(calibrate_mapping(&formats::read_calibration_points(path)?)?),
            CalibrationSpec::Coefficient(c) => Ok(DetectionCalibration::from_coefficient(*c)?),
        }
    }
}
