use ase_qrng_core::detection::VoltageTrace;
use ase_qrng_core::entropy::{
    estimate_resolution, gaussian_fit, merge_distribution, min_entropy, quantize_trace,
};
use ase_qrng_core::extractor::{
    bits_from_str, random_bits, raw_bits_from_trace, toeplitz_extract, Bits, ToeplitzSpec,
};
use ase_qrng_core::histogram::Histogram;
use ase_qrng_core::photon::{build_distribution, ModalModel, PhotonDistribution};
use ase_qrng_core::sampling::{inverse_transform_sample, SampleRequest};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

const DV0: f64 = 2.968e-8;

fn pmf(m: f64, n_bar: f64) -> PhotonDistribution {
    build_distribution(&ModalModel::new(m, n_bar).unwrap(), 1e-12).unwrap()
}

fn trace(samples: Vec<f64>) -> VoltageTrace {
    VoltageTrace::new(samples, 1e10, "test").unwrap()
}

#[test]
fn theoretical_min_entropy_row_one() {
    let h = min_entropy(&pmf(2.9627, 17383.0)).unwrap();
    assert!((h - 15.9580).abs() < 2e-3, "{h}");
}

#[test]
fn merged_min_entropy_first_and_last_rows() {
    let h = min_entropy(&merge_distribution(&pmf(2.9627, 17383.0), 51).unwrap()).unwrap();
    assert!((h - 10.2859).abs() < 5e-3, "{h}");
    let h = min_entropy(&merge_distribution(&pmf(100.0193, 26681.0), 182).unwrap()).unwrap();
    assert!((h - 11.8375).abs() < 2e-2, "{h}");
}

#[test]
fn merge_with_unit_resolution_is_identity() {
    let d = pmf(4.942, 23052.0);
    let merged = merge_distribution(&d, 1).unwrap();
    assert_eq!(merged.probabilities, d.probabilities());
    assert_eq!(min_entropy(&merged).unwrap(), min_entropy(&d).unwrap());
}

#[test]
fn ceiling_consistency_on_quantized_grids() {
    for k in [1u64, 2, 3, 10, 51] {
        let step = k as f64 * DV0;
        // Every level 0..400 populated, in scrambled order with repeats.
        let samples: Vec<f64> = (0..4000u64).map(|i| ((i * 7919) % 400) as f64 * step).collect();
        let r = estimate_resolution(&trace(samples), DV0).unwrap();
        assert_eq!(r.resolution_m, k, "k = {k}, gap {}", r.mean_unique_gap);
    }
}

#[test]
fn empirical_entropy_converges_to_merged() {
    // Counts drawn from the row-one pmf, observed on the 51-photon grid: the
    // plug-in estimate approaches the merged min-entropy.
    let d = pmf(2.9627, 17383.0);
    let h_merged = min_entropy(&merge_distribution(&d, 51).unwrap()).unwrap();
    let t = inverse_transform_sample(&SampleRequest::new(&d, 10_000_000, 8)).unwrap();
    let levels: Vec<u64> = t.counts.iter().map(|n| n / 51).collect();
    let h_emp = min_entropy(&Histogram::from_values(&levels).unwrap()).unwrap();
    assert!((h_emp - h_merged).abs() < 0.05, "{h_emp} vs {h_merged}");
}

#[test]
fn quantized_gaussian_level_count() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let samples: Vec<f64> = (0..100_000).map(|_| rng.sample(StandardNormal)).collect();
    let q = quantize_trace(&trace(samples.clone()), 0.5).unwrap();
    let levels = Histogram::from_values(q.samples()).unwrap().len() as f64;
    // Direct count oracle: levels are floor(x / 0.5) between the extremes.
    let (lo, hi) = samples
        .iter()
        .fold((f64::MAX, f64::MIN), |(lo, hi), v| (lo.min(*v), hi.max(*v)));
    let span = ((hi / 0.5).floor() - (lo / 0.5).floor() + 1.0).round();
    assert!((levels - span).abs() <= 2.0, "{levels} vs {span}");
    assert!((levels - 6.0 / 0.5).abs() <= 6.0, "{levels} outside the ±3σ..±4.5σ span");
}

#[test]
fn gaussian_fit_self_consistency() {
    let mut rng = ChaCha8Rng::seed_from_u64(33);
    let (mu, sigma) = (1.2e-3, 3.0e-4);
    let samples: Vec<f64> = (0..1_000_000)
        .map(|_| mu + sigma * rng.sample::<f64, _>(StandardNormal))
        .collect();
    let fit = gaussian_fit(&trace(samples)).unwrap();
    assert!((fit.mean / mu - 1.0).abs() < 5e-3);
    assert!((fit.std_dev / sigma - 1.0).abs() < 5e-3);
    assert!(fit.fit_distance < 0.01, "{}", fit.fit_distance);
}

#[test]
fn raw_bit_length() {
    let samples: Vec<f64> = (0..1_000_000).map(|i| (i % 40_000) as f64).collect();
    let bits = raw_bits_from_trace(&trace(samples), 16).unwrap();
    assert_eq!(bits.len(), 16_000_000);
}

#[test]
fn extraction_ratio_for_row_one() {
    let k = ToeplitzSpec::output_bits_for(10.2859, 16, 4096);
    assert_eq!(k * 16, 4096 * 10);
    let spec = ToeplitzSpec::new(4096, k, random_bits(4096 + k - 1, 3)).unwrap();
    let raw = random_bits(4096 * 5 + 100, 4);
    let out = toeplitz_extract(&raw, &spec);
    assert_eq!(out.bits.len() * 16, 5 * 4096 * 10);
    assert_eq!(out.discarded_bits, 100);
}

#[test]
fn extraction_is_deterministic() {
    let spec = ToeplitzSpec::new(512, 200, random_bits(711, 1)).unwrap();
    let raw = random_bits(512 * 8, 2);
    assert_eq!(toeplitz_extract(&raw, &spec), toeplitz_extract(&raw, &spec));
    assert_eq!(
        toeplitz_extract(&bits_from_str("110"), &ToeplitzSpec::new(3, 2, bits_from_str("1011")).unwrap())
            .bits,
        bits_from_str("10")
    );
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn merging_nested_blocks_never_raises_entropy(
        m in 0.5f64..20.0,
        n_bar in 1.0f64..300.0,
        m1 in 1u64..20,
        j in 1u64..6,
    ) {
        let d = pmf(m, n_bar);
        let fine = merge_distribution(&d, m1).unwrap();
        let coarse = merge_distribution(&d, m1 * j).unwrap();
        prop_assert!(min_entropy(&coarse).unwrap() <= min_entropy(&fine).unwrap() + 1e-12);
        let total: f64 = d.probabilities().iter().sum();
        let merged_total: f64 = coarse.probabilities.iter().sum();
        prop_assert!((merged_total - total).abs() < 1e-12);
        prop_assert!(min_entropy(&fine).unwrap() <= min_entropy(&d).unwrap() + 1e-12);
    }

    #[test]
    fn toeplitz_is_linear_over_gf2(
        n in 1usize..300,
        k_frac in 0.01f64..1.0,
        seed in any::<u64>(),
        blocks in 1usize..4,
    ) {
        let k = ((n as f64 * k_frac) as usize).clamp(1, n);
        let spec = ToeplitzSpec::new(n, k, random_bits(n + k - 1, seed)).unwrap();
        let x = random_bits(n * blocks, seed ^ 1);
        let y = random_bits(n * blocks, seed ^ 2);
        let xy: Bits = x.iter().zip(y.iter()).map(|(a, b)| *a ^ *b).collect();
        let ex = toeplitz_extract(&x, &spec).bits;
        let ey = toeplitz_extract(&y, &spec).bits;
        let exy = toeplitz_extract(&xy, &spec).bits;
        let sum: Bits = ex.iter().zip(ey.iter()).map(|(a, b)| *a ^ *b).collect();
        prop_assert_eq!(exy, sum);
    }

    #[test]
    fn toeplitz_matches_explicit_matrix(n in 1usize..40, k_frac in 0.01f64..1.0, seed in any::<u64>()) {
        let k = ((n as f64 * k_frac) as usize).clamp(1, n);
        let seed_bits = random_bits(n + k - 1, seed);
        let spec = ToeplitzSpec::new(n, k, seed_bits.clone()).unwrap();
        let x = random_bits(n, seed.wrapping_add(9));
        // Oracle: dense matrix from the seed by the documented convention.
        let entry = |i: usize, j: usize| if i >= j { seed_bits[i - j] } else { seed_bits[n - 1 + j - i] };
        let expected: Bits = (0..k)
            .map(|j| (0..n).filter(|&i| entry(i, j) && x[i]).count() % 2 == 1)
            .collect();
        prop_assert_eq!(toeplitz_extract(&x, &spec).bits, expected);
    }
}
