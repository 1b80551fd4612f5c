//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.
//!
//! Run a subset by passing criterion numbers:
//! `cargo test -p ase-qrng --test acceptance -- 3 4`.

use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use ase_qrng::config::{ExperimentConfig, NoiseSpec};
use ase_qrng::core::detection::{calibrate_mapping, VoltageTrace};
use ase_qrng::core::entropy::{
    estimate_resolution, gaussian_fit, merge_distribution, min_entropy, quantize_trace,
};
use ase_qrng::core::extractor::{
    bits_from_str, random_bits, raw_bits_from_trace, toeplitz_extract, Bits, ToeplitzExtractor,
    ToeplitzSpec, DEFAULT_INPUT_BLOCK_BITS,
};
use ase_qrng::core::photon::{
    build_distribution, mean_photons, mode_number, ModalModel, DEFAULT_TAIL_TOLERANCE,
};
use ase_qrng::experiment::{self, ExperimentRun, ReferenceRow, REFERENCE_ROWS, REFERENCE_VOLTS_PER_PHOTON};
use ase_qrng::formats::pack_msb_first;
use ase_qrng::parallel::sample_parallel;
use ase_qrng::stats::{byte_uniformity, chi_square_gof, monobit};
use rayon::prelude::*;

const DV0: f64 = REFERENCE_VOLTS_PER_PHOTON;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn within_budget(elapsed: Duration, limit_s: f64) -> (bool, String) {
    let s = elapsed.as_secs_f64();
    (s < limit_s, format!("runtime {s:.2}s (limit {limit_s}s)"))
}

/// Agreement to four significant figures of the printed value.
fn four_sig_figs(value: f64, printed: f64) -> bool {
    let half_ulp = 0.5 * 10f64.powf(printed.abs().log10().floor() - 3.0);
    (value - printed).abs() <= half_ulp * (1.0 + 1e-9)
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut pass = true;
    let mut cells = Vec::new();
    for row in REFERENCE_ROWS {
        let m = mode_number(&row.setup()).unwrap();
        let ok = four_sig_figs(m, row.mode_number);
        pass &= ok;
        cells.push(format!("{m:.4}{}", if ok { "" } else { "(!)" }));
    }
    let (fast, time) = within_budget(start.elapsed(), 1.0);
    outcome(pass && fast, format!("M = [{}]; {time}", cells.join(", ")))
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let mut pass = true;
    let mut cells = Vec::new();
    for (i, row) in REFERENCE_ROWS.iter().enumerate() {
        let model = mean_photons(&row.setup(), row.mode_number).unwrap();
        let rel = model.mean_photons_per_mode / row.mean_photons_per_mode - 1.0;
        let tol = if i < 3 { 0.005 } else { 0.035 };
        pass &= rel.abs() < tol;
        cells.push(format!("{:.0}({:+.2}%)", model.mean_photons_per_mode, 100.0 * rel));
    }
    let (fast, time) = within_budget(start.elapsed(), 1.0);
    outcome(pass && fast, format!("n_bar = [{}]; {time}", cells.join(", ")))
}

fn criterion_3() -> Outcome {
    let start = Instant::now();
    let d = build_distribution(&ModalModel::new(2.9627, 17383.0).unwrap(), DEFAULT_TAIL_TOLERANCE).unwrap();
    let p_max = d.max_probability();
    let h = min_entropy(&d).unwrap();
    let (fast, time) = within_budget(start.elapsed(), 5.0);
    let pass = (p_max / 1.5709e-5 - 1.0).abs() < 1e-3 && (h - 15.9580).abs() <= 0.002 && fast;
    outcome(
        pass,
        format!("max p = {p_max:.5e}, H = {h:.4} bits over {} support points; {time}", d.len()),
    )
}

fn criterion_4() -> Outcome {
    let start = Instant::now();
    let mut pass = true;
    let mut cells = Vec::new();
    for (i, row) in REFERENCE_ROWS.iter().enumerate() {
        let model = ModalModel::new(row.mode_number, row.mean_photons_per_mode).unwrap();
        let d = build_distribution(&model, DEFAULT_TAIL_TOLERANCE).unwrap();
        let h = min_entropy(&merge_distribution(&d, row.resolution_m).unwrap()).unwrap();
        let tol = if i == 0 { 0.005 } else { 0.02 };
        let rate = h * 1e10;
        pass &= (h - row.h_merged_bits).abs() <= tol && (rate / (row.h_merged_bits * 1e10) - 1.0).abs() < 0.002;
        cells.push(format!("{h:.4}"));
    }
    let (fast, time) = within_budget(start.elapsed(), 30.0);
    outcome(pass && fast, format!("h_merged = [{}]; {time}", cells.join(", ")))
}

fn criterion_5() -> Outcome {
    let two_point = VoltageTrace::new(vec![0.0, 1.5114e-6], 1e10, "gap").unwrap();
    let m = estimate_resolution(&two_point, 2.968e-8).unwrap().resolution_m;
    let mut pass = m == 51;
    let mut cells = Vec::new();
    for k in [1u64, 2, 3, 10, 51] {
        // 10^5 uniform draws over 200 levels populate every level.
        let width = k as f64 * DV0;
        let raw: Vec<f64> = random_bits(64 * 100_000, k)
            .as_raw_slice()
            .iter()
            .map(|w| *w as f64 / 2f64.powi(64) * 200.0 * width + 0.25 * width)
            .collect();
        let trace = quantize_trace(&VoltageTrace::new(raw, 1e10, "q").unwrap(), width).unwrap();
        let got = estimate_resolution(&trace, DV0).unwrap().resolution_m;
        pass &= got == k;
        cells.push(format!("{k}->{got}"));
    }
    outcome(pass, format!("m(1.5114e-6 V gap) = {m}; quantized [{}]", cells.join(", ")))
}

fn criterion_6() -> Outcome {
    let points = [
        (47130.0, 1.3963e-3),
        (78498.0, 2.3369e-3),
        (156840.0, 4.6824e-3),
        (781857.0, 23.201e-3),
        (1560593.0, 46.256e-3),
        (2351813.0, 69.857e-3),
        (3128989.0, 93.074e-3),
    ];
    let cal = calibrate_mapping(&points).unwrap();
    let rel = cal.volts_per_photon / 2.968e-8 - 1.0;
    let pass = rel.abs() < 0.005 && cal.fit_residual_relative_max < 0.01;
    outcome(
        pass,
        format!(
            "c = {:.5e} V ({:+.3}%), max residual {:.3}%",
            cal.volts_per_photon,
            100.0 * rel,
            100.0 * cal.fit_residual_relative_max
        ),
    )
}

fn criterion_7() -> Outcome {
    let start = Instant::now();
    let (m, n_bar) = (2.9627, 17383.0);
    let d = build_distribution(&ModalModel::new(m, n_bar).unwrap(), DEFAULT_TAIL_TOLERANCE).unwrap();
    let n = 1_000_000;
    let se = (m * n_bar * (1.0 + n_bar) / n as f64).sqrt();
    let results: Vec<(f64, bool)> = (0..100u64)
        .into_par_iter()
        .map(|seed| {
            let t = sample_parallel(&d, n, 1000 + seed).unwrap();
            let p = chi_square_gof(&t.counts, &d).unwrap().p_value;
            let mean = t.counts.iter().map(|c| *c as f64).sum::<f64>() / n as f64;
            (p, (mean - m * n_bar).abs() < 3.0 * se)
        })
        .collect();
    let passed = results.iter().filter(|(p, _)| *p > 0.001).count();
    let mean_ok = results.iter().filter(|(_, ok)| *ok).count();
    let min_p = results.iter().map(|r| r.0).fold(1.0, f64::min);
    let (fast, time) = within_budget(start.elapsed(), 60.0);
    // The mean is checked per seed; at 3 standard errors about 0.3 of 100
    // seeds are expected outside, so every seed but one must be inside.
    let pass = passed >= 99 && mean_ok >= 99 && fast;
    outcome(
        pass,
        format!("chi-square p > 0.001 for {passed}/100 seeds (min p {min_p:.2e}); mean within 3 SE for {mean_ok}/100; {time}"),
    )
}

/// Row `row` simulated at its resolution with Gaussian noise of standard
/// deviation `noise_std_v`.
fn simulate_row(row: &ReferenceRow, count: usize, seed: u64, noise_std_v: f64) -> ExperimentRun {
    let text = row.config_text(count, seed, Path::new("unused"));
    let mut config = ExperimentConfig::parse(&text, Path::new(".")).unwrap();
    config.noise = NoiseSpec::Synthetic {
        mean_v: 0.0,
        std_dev_v: noise_std_v,
        seed,
    };
    experiment::simulate(&config).unwrap()
}

const END_TO_END_SAMPLES: usize = 10_000_000;
const END_TO_END_SEEDS: u64 = 10;

fn criterion_8() -> Outcome {
    let start = Instant::now();
    let sigma = 0.5 * 51.0 * DV0;
    let first = simulate_row(&REFERENCE_ROWS[0], END_TO_END_SAMPLES, 1, sigma).report;
    let row_one_ok = first.deviation.abs() < 0.02;

    let mut medians = Vec::new();
    for row in &REFERENCE_ROWS {
        let mut devs: Vec<f64> = (0..END_TO_END_SEEDS)
            .map(|seed| simulate_row(row, END_TO_END_SAMPLES, 100 + seed, sigma).report.deviation.abs())
            .collect();
        devs.sort_by(f64::total_cmp);
        medians.push(0.5 * (devs[4] + devs[5]));
    }
    let trend_ok = medians.windows(2).all(|w| w[1] <= w[0]);
    let (fast, time) = within_budget(start.elapsed(), 600.0);
    outcome(
        row_one_ok && trend_ok && fast,
        format!(
            "row 1: h_merged {:.4}, h_empirical {:.4}, deviation {:+.3}% ({}); median |deviation| by M = [{}] ({}); {time}",
            first.h_merged,
            first.h_empirical,
            100.0 * first.deviation,
            if row_one_ok { "ok" } else { "exceeds 2%" },
            medians.iter().map(|d| format!("{:.3}%", 100.0 * d)).collect::<Vec<_>>().join(", "),
            if trend_ok { "non-increasing" } else { "not non-increasing" },
        ),
    )
}

fn criterion_9() -> Outcome {
    let sigma = 0.5 * 51.0 * DV0;
    let low = gaussian_fit(&simulate_row(&REFERENCE_ROWS[0], END_TO_END_SAMPLES, 9, sigma).trace).unwrap();
    let high = gaussian_fit(&simulate_row(&REFERENCE_ROWS[5], END_TO_END_SAMPLES, 9, sigma).trace).unwrap();
    let pass = high.fit_distance < 0.03 && high.fit_distance < low.fit_distance;
    outcome(
        pass,
        format!(
            "fit distance M=100.0193: {:.4}, M=2.9627: {:.4}",
            high.fit_distance, low.fit_distance
        ),
    )
}

fn criterion_10() -> Outcome {
    // Hand-computed example: A = [[1,1],[0,1],[1,0]], x = 110 gives y = 10.
    let spec = ToeplitzSpec::new(3, 2, bits_from_str("1011")).unwrap();
    let hand = toeplitz_extract(&bits_from_str("110"), &spec).bits == bits_from_str("10");

    let spec = ToeplitzSpec::new(512, 300, random_bits(811, 5)).unwrap();
    let extractor = ToeplitzExtractor::new(spec);
    let linear = (0..50u64).all(|i| {
        let x = random_bits(512 * 3, 2 * i);
        let y = random_bits(512 * 3, 2 * i + 1);
        let xy: Bits = x.clone() ^ y.clone();
        extractor.extract(&xy).bits == (extractor.extract(&x).bits ^ extractor.extract(&y).bits)
    });

    // 400 blocks of 4096 raw bits at 16 bits per sample need 102400 samples.
    let run = simulate_row(&REFERENCE_ROWS[0], 102_400, 10, 0.5 * 51.0 * DV0);
    let raw = raw_bits_from_trace(&run.trace, 16).unwrap();
    let spec = ToeplitzSpec::from_report(&run.report, 16, DEFAULT_INPUT_BLOCK_BITS, 10).unwrap();
    let out = ToeplitzExtractor::new(spec).extract(&raw).bits;
    let (fraction, z) = monobit(out.count_ones(), out.len());
    let bytes = byte_uniformity(&pack_msb_first(&out));
    let smoke = out.len() >= 1_000_000 && z.abs() < 4.0 && bytes.p_value > 0.001;
    outcome(
        hand && linear && smoke,
        format!(
            "hand example {}, linearity {}; {} output bits: ones {fraction:.5} (z = {z:+.2}), byte chi-square p = {:.3}",
            if hand { "ok" } else { "WRONG" },
            if linear { "ok" } else { "BROKEN" },
            out.len(),
            bytes.p_value
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [(u32, &str, fn() -> Outcome); 10] = [
        (1, "mode number reproduction", criterion_1),
        (2, "mean photon number", criterion_2),
        (3, "theoretical min-entropy", criterion_3),
        (4, "merged min-entropy", criterion_4),
        (5, "resolution arithmetic", criterion_5),
        (6, "calibration", criterion_6),
        (7, "sampler fidelity", criterion_7),
        (8, "end-to-end consistency", criterion_8),
        (9, "Gaussian limit", criterion_9),
        (10, "extractor", criterion_10),
    ];
    let selected: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (id, name, check) in criteria {
        if !selected.is_empty() && !selected.contains(&id) {
            continue;
        }
        let result = check();
        println!(
            "criterion {id:>2} {name:<26} {}  {}",
            if result.pass { "PASS" } else { "FAIL" },
            result.detail
        );
        failed += usize::from(!result.pass);
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
