//! Distances and goodness-of-fit tests between traces and distributions.

use std::cmp::Ordering;

use ase_qrng_core::detection::VoltageTrace;
use ase_qrng_core::histogram::{Histogram, Symbol};
use ase_qrng_core::photon::PhotonDistribution;
use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{AppError, Result};

/// Smallest expected count allowed in a chi-square bin.
pub const MIN_EXPECTED: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChiSquareTest {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

impl ChiSquareTest {
    fn new(statistic: f64, dof: usize) -> Self {
        ChiSquareTest {
            statistic,
            dof,
            p_value: chi_square_sf(statistic, dof),
        }
    }
}

/// Upper tail probability of a chi-square variate.
pub fn chi_square_sf(statistic: f64, dof: usize) -> f64 {
    if statistic.is_nan() || statistic == f64::INFINITY {
        return 0.0;
    }
    if dof == 0 {
        return if statistic > 0.0 { 0.0 } else { 1.0 };
    }
    ChiSquared::new(dof as f64)
        .map(|d| d.sf(statistic.max(0.0)))
        .unwrap_or(0.0)
}

/// `½ Σ |p − q|` over two aligned probability vectors.
pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

/// Pearson goodness of fit of photon counts against a distribution.
///
/// Support points are pooled in order until each bin expects at least
/// [`MIN_EXPECTED`] counts; a short final bin joins its predecessor. Counts
/// outside the support fall into the nearest edge bin.
pub fn chi_square_gof(counts: &[u64], distribution: &PhotonDistribution) -> Result<ChiSquareTest> {
    if counts.is_empty() {
        return Err(AppError::Model(ase_qrng_core::Error::Empty("trace")));
    }
    let n = counts.len() as f64;
    let base = distribution.support_min();
    let last = distribution.len() - 1;
    let mut observed_at = vec![0u64; distribution.len()];
    for &c in counts {
        let i = (c.saturating_sub(base) as usize).min(last);
        observed_at[i] += 1;
    }
    let mut bins: Vec<(f64, f64)> = Vec::new();
    let (mut expected, mut observed) = (0.0, 0.0);
    for (p, o) in distribution.probabilities().iter().zip(&observed_at) {
        expected += n * p;
        observed += *o as f64;
        if expected >= MIN_EXPECTED {
            bins.push((observed, expected));
            (expected, observed) = (0.0, 0.0);
        }
    }
    match bins.last_mut() {
        Some(tail) => {
            tail.0 += observed;
            tail.1 += expected;
        }
        None => bins.push((observed, expected)),
    }
    let statistic = bins.iter().map(|(o, e)| (o - e) * (o - e) / e).sum();
    Ok(ChiSquareTest::new(statistic, bins.len() - 1))
}

/// How two traces are put on common bins.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BinSpec {
    /// One bin per distinct value seen in either trace.
    UnionOfLevels,
    /// Bins `[k·w, (k+1)·w)`.
    FixedWidth(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceComparison {
    pub total_variation: f64,
    pub chi_square: ChiSquareTest,
    pub bins: usize,
}

/// Counts of two histograms over the sorted union of their keys.
fn align<T: Symbol>(a: &Histogram<T>, b: &Histogram<T>) -> Vec<(u64, u64)> {
    let (a, b) = (a.counts(), b.counts());
    let mut out = Vec::with_capacity(a.len().max(b.len()));
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        let order = match (a.get(i), b.get(j)) {
            (Some(x), Some(y)) => x.0.total_cmp(&y.0),
            (Some(_), None) => Ordering::Less,
            _ => Ordering::Greater,
        };
        match order {
            Ordering::Less => {
                out.push((a[i].1, 0));
                i += 1;
            }
            Ordering::Greater => {
                out.push((0, b[j].1));
                j += 1;
            }
            Ordering::Equal => {
                out.push((a[i].1, b[j].1));
                i += 1;
                j += 1;
            }
        }
    }
    out
}

fn aligned_counts(a: &VoltageTrace, b: &VoltageTrace, bins: BinSpec) -> Result<Vec<(u64, u64)>> {
    match bins {
        BinSpec::UnionOfLevels => Ok(align(
            &Histogram::from_values(a.samples())?,
            &Histogram::from_values(b.samples())?,
        )),
        BinSpec::FixedWidth(w) => {
            if !(w > 0.0 && w.is_finite()) {
                return Err(AppError::config("bin_width", "must be positive and finite"));
            }
            let index = |t: &VoltageTrace| -> Vec<i64> { t.samples().iter().map(|v| (v / w).floor() as i64).collect() };
            Ok(align(
                &Histogram::from_values(&index(a))?,
                &Histogram::from_values(&index(b))?,
            ))
        }
    }
}

/// Total variation plus a chi-square test between two traces on common bins.
///
/// With `expected_from_a`, `a`'s frequencies are the expected law for `b`
/// (bins pooled until `b` expects [`MIN_EXPECTED`] counts). Otherwise a
/// two-sample homogeneity test is used, symmetric in `a` and `b`, with bins
/// pooled until both traces together hold `2·MIN_EXPECTED` counts.
pub fn compare_traces(
    a: &VoltageTrace,
    b: &VoltageTrace,
    bins: BinSpec,
    expected_from_a: bool,
) -> Result<TraceComparison> {
    let counts = aligned_counts(a, b, bins)?;
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let total_variation = 0.5
        * counts
            .iter()
            .map(|(x, y)| (*x as f64 / na - *y as f64 / nb).abs())
            .sum::<f64>();

    let threshold = |x: f64, y: f64| {
        if expected_from_a {
            x / na * nb >= MIN_EXPECTED
        } else {
            x + y >= 2.0 * MIN_EXPECTED
        }
    };
    let mut pooled: Vec<(f64, f64)> = Vec::new();
    let (mut x, mut y) = (0.0, 0.0);
    for (ca, cb) in &counts {
        x += *ca as f64;
        y += *cb as f64;
        if threshold(x, y) {
            pooled.push((x, y));
            (x, y) = (0.0, 0.0);
        }
    }
    match pooled.last_mut() {
        Some(tail) => {
            tail.0 += x;
            tail.1 += y;
        }
        None => pooled.push((x, y)),
    }

    let statistic = if expected_from_a {
        pooled
            .iter()
            .map(|(x, y)| {
                let e = x / na * nb;
                if e > 0.0 {
                    (y - e) * (y - e) / e
                } else if *y > 0.0 {
                    f64::INFINITY
                } else {
                    0.0
                }
            })
            .sum()
    } else {
        let n = na + nb;
        pooled
            .iter()
            .map(|(x, y)| {
                let column = x + y;
                let (ea, eb) = (column * na / n, column * nb / n);
                (x - ea) * (x - ea) / ea + (y - eb) * (y - eb) / eb
            })
            .sum()
    };
    Ok(TraceComparison {
        total_variation,
        chi_square: ChiSquareTest::new(statistic, pooled.len() - 1),
        bins: counts.len(),
    })
}

/// Monobit fraction and its distance from ½ in standard deviations.
pub fn monobit(ones: usize, len: usize) -> (f64, f64) {
    let fraction = ones as f64 / len as f64;
    let z = (fraction - 0.5) / (0.25 / len as f64).sqrt();
    (fraction, z)
}

/// Chi-square test of byte values against the uniform law on 0..=255.
pub fn byte_uniformity(bytes: &[u8]) -> ChiSquareTest {
    let mut counts = [0u64; 256];
    for b in bytes {
        counts[*b as usize] += 1;
    }
    let e = bytes.len() as f64 / 256.0;
    let statistic = counts.iter().map(|c| (*c as f64 - e).powi(2) / e).sum();
    ChiSquareTest::new(statistic, 255)
}
