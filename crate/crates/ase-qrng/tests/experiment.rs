use std::path::Path;

use ase_qrng::config::ExperimentConfig;
use ase_qrng::core::detection::{photons_to_voltage, DetectionCalibration};
use ase_qrng::core::entropy::quantize_trace;
use ase_qrng::core::photon::{build_distribution, ModalModel};
use ase_qrng::experiment::{self, REFERENCE_ROWS};
use ase_qrng::parallel::sample_parallel;
use ase_qrng::stats::{compare_traces, BinSpec};

fn row_config(row: usize, count: usize, seed: u64, dir: &Path) -> ExperimentConfig {
    let text = REFERENCE_ROWS[row].config_text(count, seed, &dir.join("out"));
    ExperimentConfig::parse(&text, dir).unwrap()
}

#[test]
fn reports_are_byte_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let mut a = row_config(0, 50_000, 21, dir.path());
    let mut b = a.clone();
    a.outputs = dir.path().join("a");
    b.outputs = dir.path().join("b");
    experiment::run_experiment(&a).unwrap();
    experiment::run_experiment(&b).unwrap();
    for name in [
        experiment::TRACE_FILE,
        experiment::EMPIRICAL_HISTOGRAM_FILE,
        experiment::THEORETICAL_HISTOGRAM_FILE,
        experiment::MERGED_FILE,
        experiment::REPORT_TEXT_FILE,
        experiment::REPORT_JSON_FILE,
    ] {
        let x = std::fs::read(a.outputs.join(name)).unwrap();
        let y = std::fs::read(b.outputs.join(name)).unwrap();
        assert!(x == y, "{name} differs between identical runs");
    }
    assert!(a.outputs.join(experiment::METADATA_FILE).exists());
}

#[test]
fn failed_run_leaves_no_files() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = row_config(0, 1000, 1, dir.path());
    config.noise = ase_qrng::config::NoiseSpec::File(dir.path().join("missing.csv"));
    let err = experiment::run_experiment(&config).unwrap_err();
    assert_eq!(err.kind(), "io");
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 0);

    // A run whose final rename cannot happen cleans up its staging directory.
    let blocked = dir.path().join("blocked");
    std::fs::write(&blocked, "not a directory").unwrap();
    let mut config = row_config(0, 1000, 1, dir.path());
    config.outputs = blocked.clone();
    assert!(experiment::run_experiment(&config).is_err());
    let names: Vec<_> = std::fs::read_dir(dir.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    assert_eq!(names, vec![std::ffi::OsString::from("blocked")]);
}

#[test]
fn measured_noise_file_is_used() {
    let dir = tempfile::tempdir().unwrap();
    let noise: Vec<f64> = (0..20_000).map(|i| if i % 2 == 0 { 1e-6 } else { -1e-6 }).collect();
    let trace = ase_qrng::core::detection::VoltageTrace::new(noise, 1e10, "dark").unwrap();
    std::fs::write(
        dir.path().join("dark.csv"),
        ase_qrng::formats::render_voltage_trace(&trace, &Default::default()),
    )
    .unwrap();
    let text = REFERENCE_ROWS[0]
        .config_text(1000, 2, Path::new("out"))
        .replace("noise_std_v", "# noise_std_v")
        .replace("quantization_m = 51\n", "")
        + "noise_file = dark.csv\n";
    let config = ExperimentConfig::parse(&text, dir.path()).unwrap();
    let run = experiment::simulate(&config).unwrap();
    // Aligned indexing: even samples carry +1 µV, odd samples −1 µV.
    let c = 2.968e-8;
    for (i, v) in run.trace.samples().iter().enumerate().take(50) {
        let residual = v - (v / c).round() * c;
        let e = if i % 2 == 0 { 1e-6 } else { -1e-6 };
        let expected = e - (e / c).round() * c;
        assert!((residual - expected).abs() < 1e-12, "sample {i}");
    }

    let short = ase_qrng::core::detection::VoltageTrace::new(vec![0.0; 100], 1e10, "dark").unwrap();
    std::fs::write(
        dir.path().join("dark.csv"),
        ase_qrng::formats::render_voltage_trace(&short, &Default::default()),
    )
    .unwrap();
    let err = experiment::simulate(&ExperimentConfig::parse(&text, dir.path()).unwrap()).unwrap_err();
    assert_eq!(err.field().as_deref(), Some("noise_file"));
}

/// Expected half-L1 distance between two independent `n`-sample empirical
/// histograms of `p`: `½ Σ E|f − g|` with `f − g ≈ N(0, 2p(1−p)/n)`.
fn sampling_noise_tv(p: &[f64], n: f64) -> f64 {
    0.5 * p
        .iter()
        .map(|p| (4.0 * p * (1.0 - p) / (std::f64::consts::PI * n)).sqrt())
        .sum::<f64>()
}

#[test]
fn independent_draws_are_close() {
    let d = build_distribution(&ModalModel::new(2.9627, 17383.0).unwrap(), 1e-12).unwrap();
    let cal = DetectionCalibration::from_coefficient(2.968e-8).unwrap();
    let width = 2040.0 * 2.968e-8;
    let draw = |seed| {
        let counts = sample_parallel(&d, 1_000_000, seed).unwrap();
        quantize_trace(&photons_to_voltage(&counts, &cal, 1e10).unwrap(), width).unwrap()
    };
    let (a, b) = (draw(1), draw(2));
    let r = compare_traces(&a, &b, BinSpec::UnionOfLevels, false).unwrap();

    let mut binned = vec![0.0; (d.support_max() / 2040 + 1) as usize];
    for (n, p) in d.iter() {
        binned[(n / 2040) as usize] += p;
    }
    let oracle = sampling_noise_tv(&binned, 1e6);
    assert!(r.total_variation < 0.01, "TV {}", r.total_variation);
    assert!((r.total_variation / oracle - 1.0).abs() < 0.25, "TV {} vs oracle {oracle}", r.total_variation);
    assert!(r.chi_square.p_value > 1e-4, "{:?}", r.chi_square);

    let ba = compare_traces(&b, &a, BinSpec::UnionOfLevels, false).unwrap();
    assert_eq!(ba.total_variation, r.total_variation);
    let expected = compare_traces(&a, &b, BinSpec::FixedWidth(width), true).unwrap();
    // Treating one sample as the exact law for the other ignores the first
    // sample's own noise, so the statistic lands near twice its dof.
    let ratio = expected.chi_square.statistic / expected.chi_square.dof as f64;
    assert!((1.5..2.5).contains(&ratio), "{:?}", expected.chi_square);
}

#[test]
fn six_row_batch_reproduces_reference_columns() {
    let dir = tempfile::tempdir().unwrap();
    let mut runs = Vec::new();
    for (i, row) in REFERENCE_ROWS.iter().enumerate() {
        let mut config = row_config(i, 200_000, 5, dir.path());
        config.outputs = dir.path().join(format!("row{}", i + 1));
        let run = experiment::run_experiment(&config).unwrap().run;
        let m = run.model.mode_number;
        assert!((m - row.mode_number).abs() <= 0.5e-4 * 10f64.powf(m.log10().floor()), "row {i}: M {m}");
        let n_tol = if i < 3 { 0.005 } else { 0.035 };
        assert!((run.model.mean_photons_per_mode / row.mean_photons_per_mode - 1.0).abs() < n_tol);
        assert_eq!(run.report.resolution.resolution_m, row.resolution_m);
        // Rows 4-6 carry the recomputed mean photon number, about 3% below the
        // printed one; that shifts h_merged by up to log2(1.035) bits.
        let h_tol = if i < 3 { 0.02 } else { 0.02 + 1.035f64.log2() };
        assert!(
            (run.report.h_merged - row.h_merged_bits).abs() < h_tol,
            "row {i}: h_merged {}",
            run.report.h_merged
        );
        runs.push(run);
    }
    let summary = experiment::render_batch_summary(&runs, &Default::default());
    assert_eq!(summary.lines().count(), 8);
}
