//! End-to-end runs: configuration in, report and plot-ready artifacts out.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use ase_qrng_core::detection::{detect, prepare_distribution, DetectionCalibration, VoltageTrace};
use ase_qrng_core::entropy::{
    build_report_at, estimate_resolution_with, merge_distribution, quantize_trace, EntropyReport,
    MergedDistribution, ResolutionEstimate, ResolutionOptions,
};
use ase_qrng_core::histogram::Histogram;
use ase_qrng_core::photon::{mode_number_for_ratio, ModalModel, OpticalSetup, PhotonDistribution};

use crate::config::{CalibrationSpec, ExperimentConfig, NoiseSpec};
use crate::error::{AppError, Result};
use crate::formats::{self, Provenance, ReportDocument};
use crate::parallel;

pub const TRACE_FILE: &str = "trace.csv";
pub const EMPIRICAL_HISTOGRAM_FILE: &str = "histogram_empirical.csv";
pub const THEORETICAL_HISTOGRAM_FILE: &str = "histogram_theoretical.csv";
pub const EMPIRICAL_BINNED_FILE: &str = "histogram_empirical_binned.csv";
pub const THEORETICAL_BINNED_FILE: &str = "histogram_theoretical_binned.csv";
pub const MERGED_FILE: &str = "merged.csv";
pub const REPORT_TEXT_FILE: &str = "report.txt";
pub const REPORT_JSON_FILE: &str = "report.json";
pub const METADATA_FILE: &str = "metadata.txt";

/// Everything a run computed, before or after it was written out.
#[derive(Debug, Clone)]
pub struct ExperimentRun {
    pub model: ModalModel,
    pub distribution: PhotonDistribution,
    pub calibration: DetectionCalibration,
    pub trace: VoltageTrace,
    pub merged: MergedDistribution,
    pub report: EntropyReport,
    pub document: ReportDocument,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub run: ExperimentRun,
    pub files: Vec<PathBuf>,
}

pub fn provenance_for(config: &ExperimentConfig) -> Provenance {
    Provenance::new(Some(config.source_sha256.clone()), Some(config.master_seed))
}

/// Runs the pipeline in memory: sample, detect, quantize, quantify.
pub fn simulate(config: &ExperimentConfig) -> Result<ExperimentRun> {
    config.validate()?;
    let noise = config.load_noise()?;
    let calibration = config.load_calibration()?;
    let (model, distribution) = prepare_distribution(&config.setup, config.tail_tolerance)?;
    let counts = parallel::sample_parallel(&distribution, config.sample_count, config.master_seed)?;
    let mut trace = detect(&counts, &calibration, &noise, config.master_seed, config.sample_rate_hz)?
        .with_label(config.label.clone());
    drop(counts);
    let delta_v0 = calibration.delta_v0();
    if let Some(m) = config.quantization_m {
        trace = quantize_trace(&trace, m as f64 * delta_v0)?;
    }
    let resolution = match config.resolution_m {
        Some(m) => ResolutionEstimate::fixed(m, delta_v0)?,
        None => estimate_resolution_with(
            &trace,
            delta_v0,
            &ResolutionOptions {
                trim_fraction: config.resolution_trim,
            },
        )?,
    };
    let report = build_report_at(&distribution, &trace, resolution)?;
    let merged = merge_distribution(&distribution, resolution.resolution_m)?;
    let mut document = ReportDocument::new(&report, provenance_for(config));
    document.mode_number = Some(model.mode_number);
    document.mean_photons_per_mode = Some(model.mean_photons_per_mode);
    document.sample_count = Some(config.sample_count as u64);
    Ok(ExperimentRun {
        model,
        distribution,
        calibration,
        trace,
        merged,
        report,
        document,
    })
}

/// Runs the pipeline and writes every artifact into `config.outputs`.
///
/// Files are staged in a temporary directory next to the output directory
/// and renamed into place only after all of them were written, so a failed
/// run leaves no partial output behind.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutcome> {
    let started = Instant::now();
    let run = simulate(config)?;
    let elapsed = started.elapsed();
    let provenance = provenance_for(config);
    let delta_v0 = run.calibration.delta_v0();

    let mut artifacts: Vec<(&str, Vec<u8>)> = Vec::new();
    artifacts.push((
        TRACE_FILE,
        formats::render_voltage_trace(&run.trace, &provenance).into_bytes(),
    ));
    let empirical = Histogram::from_values(run.trace.samples())?;
    artifacts.push((
        EMPIRICAL_HISTOGRAM_FILE,
        formats::render_histogram(empirical.frequencies(), &provenance).into_bytes(),
    ));
    let level_voltage = |level: i64| run.merged.photon_range(level).0 as f64 * delta_v0;
    artifacts.push((
        THEORETICAL_HISTOGRAM_FILE,
        formats::render_histogram(run.merged.iter().map(|(l, p)| (level_voltage(l), p)), &provenance)
            .into_bytes(),
    ));
    artifacts.push((
        MERGED_FILE,
        formats::render_merged(&run.merged, delta_v0, &provenance).into_bytes(),
    ));
    if let Some(bins) = config.plot_bins {
        let (lo, hi) = run
            .trace
            .samples()
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(*v), hi.max(*v)));
        let empirical = fixed_bins(empirical.frequencies(), lo, hi, bins);
        let theoretical = fixed_bins(run.merged.iter().map(|(l, p)| (level_voltage(l), p)), lo, hi, bins);
        let binned = provenance.clone().with("plot_bins", bins);
        artifacts.push((EMPIRICAL_BINNED_FILE, formats::render_histogram(empirical, &binned).into_bytes()));
        artifacts.push((THEORETICAL_BINNED_FILE, formats::render_histogram(theoretical, &binned).into_bytes()));
    }
    artifacts.push((REPORT_TEXT_FILE, run.document.render_text().into_bytes()));
    artifacts.push((REPORT_JSON_FILE, run.document.render_json().into_bytes()));
    artifacts.push((METADATA_FILE, metadata(config, elapsed.as_secs_f64()).into_bytes()));

    let files = commit_files(&config.outputs, &artifacts)?;
    Ok(ExperimentOutcome { run, files })
}

/// Mass of `(value, frequency)` pairs collected into `bins` equal bins over
/// `[lo, hi]`, reported at bin centres. Values outside the range go to the
/// edge bins.
pub fn fixed_bins<I>(rows: I, lo: f64, hi: f64, bins: usize) -> Vec<(f64, f64)>
where
    I: IntoIterator<Item = (f64, f64)>,
{
    let width = if hi > lo { (hi - lo) / bins as f64 } else { 1.0 };
    let mut mass = vec![0.0; bins];
    for (v, f) in rows {
        let i = ((v - lo) / width).floor().clamp(0.0, (bins - 1) as f64) as usize;
        mass[i] += f;
    }
    mass.into_iter()
        .enumerate()
        .map(|(i, f)| (lo + (i as f64 + 0.5) * width, f))
        .collect()
}

fn metadata(config: &ExperimentConfig, elapsed_s: f64) -> String {
    let now = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let mut out = provenance_for(config).header();
    out.push_str(&format!("finished_unix_s = {now}\nelapsed_s = {elapsed_s:.3}\n"));
    match &config.noise {
        NoiseSpec::File(p) => out.push_str(&format!("noise_file = {}\n", p.display())),
        NoiseSpec::Synthetic { mean_v, std_dev_v, seed } => out.push_str(&format!(
            "noise_mean_v = {mean_v:e}\nnoise_std_v = {std_dev_v:e}\nnoise_seed = {seed}\n"
        )),
    }
    if let CalibrationSpec::File(p) = &config.calibration {
        out.push_str(&format!("calibration_file = {}\n", p.display()));
    }
    out
}

/// Writes `files` into a staging directory beside `dir`, then renames each
/// into `dir`.
pub fn commit_files(dir: &Path, files: &[(&str, Vec<u8>)]) -> Result<Vec<PathBuf>> {
    let parent = match dir.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    fs::create_dir_all(&parent).map_err(|e| AppError::io(&parent, e))?;
    let staging = tempfile::Builder::new()
        .prefix(".ase-qrng-staging-")
        .tempdir_in(&parent)
        .map_err(|e| AppError::io(&parent, e))?;
    for (name, bytes) in files {
        let path = staging.path().join(name);
        fs::write(&path, bytes).map_err(|e| AppError::io(&path, e))?;
    }
    fs::create_dir_all(dir).map_err(|e| AppError::io(dir, e))?;
    let mut written = Vec::with_capacity(files.len());
    for (name, _) in files {
        let target = dir.join(name);
        fs::rename(staging.path().join(name), &target).map_err(|e| AppError::io(&target, e))?;
        written.push(target);
    }
    Ok(written)
}

/// Writes one file through a sibling temporary file and a rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let parent = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    fs::create_dir_all(parent).map_err(|e| AppError::io(parent, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(parent).map_err(|e| AppError::io(parent, e))?;
    std::io::Write::write_all(&mut tmp, bytes).map_err(|e| AppError::io(path, e))?;
    tmp.persist(path).map_err(|e| AppError::io(path, e.error))?;
    Ok(())
}

/// `(r, s, M)` over `points` log-spaced bandwidth ratios per degeneracy.
pub fn emit_mode_number_surface(
    ratio_min: f64,
    ratio_max: f64,
    points: usize,
    s_values: &[u8],
) -> Result<Vec<(f64, u8, f64)>> {
    if !(ratio_min > 0.0 && ratio_min.is_finite()) {
        return Err(AppError::config("rmin", "must be positive and finite"));
    }
    if !(ratio_max > ratio_min && ratio_max.is_finite()) {
        return Err(AppError::config("rmax", "must be finite and greater than rmin"));
    }
    if points < 2 {
        return Err(AppError::config("points", "must be at least 2"));
    }
    if s_values.is_empty() || s_values.iter().any(|s| !matches!(s, 1 | 2)) {
        return Err(AppError::config("s", "polarization degeneracy must be 1 or 2"));
    }
    let (a, b) = (ratio_min.ln(), ratio_max.ln());
    let mut rows = Vec::with_capacity(points * s_values.len());
    for &s in s_values {
        for i in 0..points {
            let r = match i {
                0 => ratio_min,
                i if i == points - 1 => ratio_max,
                i => (a + (b - a) * i as f64 / (points - 1) as f64).exp(),
            };
            rows.push((r, s, mode_number_for_ratio(r, s)));
        }
    }
    Ok(rows)
}

pub fn render_surface(rows: &[(f64, u8, f64)], provenance: &Provenance) -> String {
    let mut out = provenance.header();
    out.push_str("r,s,M\n");
    for (r, s, m) in rows {
        out.push_str(&format!("{},{s},{}\n", formats::fmt_f64(*r), formats::fmt_f64(*m)));
    }
    out
}

/// One of the six reference SLED setups: optical bandwidth, optical power,
/// the printed mode number and mean photon number, and the acquisition
/// resolution in photons.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceRow {
    pub optical_bandwidth_hz: f64,
    pub optical_power_w: f64,
    pub mode_number: f64,
    pub mean_photons_per_mode: f64,
    pub resolution_m: u64,
    pub h_merged_bits: f64,
}

pub const REFERENCE_ELECTRICAL_BANDWIDTH_HZ: f64 = 5e9;
pub const REFERENCE_WAVELENGTH_M: f64 = 1550e-9;
pub const REFERENCE_VOLTS_PER_PHOTON: f64 = 2.968e-8;
pub const REFERENCE_RESOLUTION_TRIM: f64 = 0.25;

pub const REFERENCE_ROWS: [ReferenceRow; 6] = [
    ReferenceRow { optical_bandwidth_hz: 13e9, optical_power_w: 33e-6, mode_number: 2.9627, mean_photons_per_mode: 17383.0, resolution_m: 51, h_merged_bits: 10.2859 },
    ReferenceRow { optical_bandwidth_hz: 16e9, optical_power_w: 45.4e-6, mode_number: 3.5535, mean_photons_per_mode: 19939.0, resolution_m: 51, h_merged_bits: 10.6597 },
    ReferenceRow { optical_bandwidth_hz: 23e9, optical_power_w: 73e-6, mode_number: 4.9420, mean_photons_per_mode: 23052.0, resolution_m: 54, h_merged_bits: 11.0834 },
    ReferenceRow { optical_bandwidth_hz: 48.5e9, optical_power_w: 161e-6, mode_number: 10.0291, mean_photons_per_mode: 25831.0, resolution_m: 91, h_merged_bits: 11.0754 },
    ReferenceRow { optical_bandwidth_hz: 251e9, optical_power_w: 825e-6, mode_number: 50.5203, mean_photons_per_mode: 26257.0, resolution_m: 109, h_merged_bits: 12.0554 },
    ReferenceRow { optical_bandwidth_hz: 498.5e9, optical_power_w: 1660e-6, mode_number: 100.0193, mean_photons_per_mode: 26681.0, resolution_m: 182, h_merged_bits: 11.8375 },
];

impl ReferenceRow {
    pub fn setup(&self) -> OpticalSetup {
        OpticalSetup::new(
            self.optical_bandwidth_hz,
            REFERENCE_ELECTRICAL_BANDWIDTH_HZ,
            1,
            self.optical_power_w,
            REFERENCE_WAVELENGTH_M,
        )
        .expect("reference setups are valid")
    }

    /// Config text for this row: quantized at its resolution with Gaussian
    /// electronic noise of half a level. The resolution is estimated from the
    /// trace with a quarter of the gaps trimmed from each end, which discounts
    /// gaps spanning unpopulated tail levels.
    pub fn config_text(&self, sample_count: usize, master_seed: u64, outputs: &Path) -> String {
        let noise_std = 0.5 * self.resolution_m as f64 * REFERENCE_VOLTS_PER_PHOTON;
        format!(
            "optical_bandwidth_hz = {:e}\nelectrical_bandwidth_hz = {:e}\npolarization_degeneracy = 1\n\
             optical_power_w = {:e}\ncenter_wavelength_m = {:e}\nnoise_std_v = {noise_std:e}\nnoise_seed = {master_seed}\n\
             volts_per_photon = {:e}\nsample_count = {sample_count}\nmaster_seed = {master_seed}\n\
             quantization_m = {}\nresolution_trim = {REFERENCE_RESOLUTION_TRIM}\noutputs = {}\n",
            self.optical_bandwidth_hz,
            REFERENCE_ELECTRICAL_BANDWIDTH_HZ,
            self.optical_power_w,
            REFERENCE_WAVELENGTH_M,
            REFERENCE_VOLTS_PER_PHOTON,
            self.resolution_m,
            outputs.display(),
        )
    }
}

/// Summary row of a batch: mode number, mean photons, resolution and
/// min-entropies.
pub fn render_batch_summary(runs: &[ExperimentRun], provenance: &Provenance) -> String {
    let mut out = provenance.header();
    out.push_str("row,mode_number,mean_photons_per_mode,resolution_m,h_theoretical_bits,h_merged_bits,h_empirical_bits,deviation,rate_bits_per_s\n");
    for (i, r) in runs.iter().enumerate() {
        out.push_str(&format!(
            "{},{:.4},{:.1},{},{:.4},{:.4},{:.4},{:.6},{:e}\n",
            i + 1,
            r.model.mode_number,
            r.model.mean_photons_per_mode,
            r.report.resolution.resolution_m,
            r.report.h_theoretical,
            r.report.h_merged,
            r.report.h_empirical,
            r.report.deviation,
            r.report.equivalent_rate_bits_per_s,
        ));
    }
    out
}
