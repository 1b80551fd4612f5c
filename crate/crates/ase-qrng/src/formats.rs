//! On-disk formats.
//!
//! Every text file starts with `#` comment lines. The first is the provenance
//! line written by [`Provenance::header`]; readers skip comments they do not
//! recognise.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use ase_qrng_core::detection::VoltageTrace;
use ase_qrng_core::entropy::{EntropyReport, MergedDistribution, ResolutionEstimate};
use ase_qrng_core::extractor::{Bits, ToeplitzSpec};
use ase_qrng_core::sampling::PhotonCountTrace;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{AppError, Result};

pub const TOOL_NAME: &str = "ase-qrng";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Config hash, seed and echoed parameters recorded at the top of every
/// emitted file.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub tool_version: String,
    pub config_sha256: Option<String>,
    pub seed: Option<u64>,
    pub parameters: Vec<(String, String)>,
}

impl Provenance {
    pub fn new(config_sha256: Option<String>, seed: Option<u64>) -> Self {
        Provenance {
            tool_version: TOOL_VERSION.to_owned(),
            config_sha256,
            seed,
            parameters: Vec::new(),
        }
    }

    /// Hash of the bytes a run was configured from.
    pub fn for_config_bytes(bytes: &[u8], seed: Option<u64>) -> Self {
        Self::new(Some(sha256_hex(bytes)), seed)
    }

    pub fn with(mut self, key: impl Into<String>, value: impl ToString) -> Self {
        self.parameters.push((key.into(), value.to_string()));
        self
    }

    pub fn header(&self) -> String {
        let mut line = format!(
            "# {TOOL_NAME} {} config_sha256={} seed={}",
            self.tool_version,
            self.config_sha256.as_deref().unwrap_or("none"),
            self.seed.map_or_else(|| "none".to_owned(), |s| s.to_string()),
        );
        for (k, v) in &self.parameters {
            let _ = write!(line, " {k}={}", v.replace(char::is_whitespace, "_"));
        }
        line.push('\n');
        line
    }

    /// Parses a line produced by [`Provenance::header`].
    pub fn parse(line: &str) -> Option<Self> {
        let rest = line.trim_end().strip_prefix("# ")?.strip_prefix(TOOL_NAME)?;
        let mut words = rest.split_whitespace();
        let mut p = Provenance {
            tool_version: words.next()?.to_owned(),
            ..Provenance::default()
        };
        for word in words {
            let (k, v) = word.split_once('=')?;
            match k {
                "config_sha256" => p.config_sha256 = (v != "none").then(|| v.to_owned()),
                "seed" => p.seed = if v == "none" { None } else { Some(v.parse().ok()?) },
                _ => p.parameters.push((k.to_owned(), v.to_owned())),
            }
        }
        Some(p)
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Shortest decimal that parses back to the same `f64`; scientific notation
/// outside `[1e-3, 1e7)`.
pub fn fmt_f64(v: f64) -> String {
    let a = v.abs();
    if a == 0.0 || (1e-3..1e7).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| AppError::io(path, e))
}

fn parse_f64(path: &Path, line: usize, field: &str, s: &str) -> Result<f64> {
    let v: f64 = s
        .trim()
        .parse()
        .map_err(|_| AppError::parse(path, line, format!("{field}: not a number: {:?}", s.trim())))?;
    if !v.is_finite() {
        return Err(AppError::parse(path, line, format!("{field}: not finite")));
    }
    Ok(v)
}

/// Non-comment, non-blank lines with their 1-based line numbers.
fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

// ---------------------------------------------------------------- traces

pub fn render_voltage_trace(trace: &VoltageTrace, provenance: &Provenance) -> String {
    let mut out = String::with_capacity(trace.len() * 24 + 256);
    out.push_str(&provenance.header());
    let _ = writeln!(
        out,
        "# sample_rate_hz={} label={}",
        fmt_f64(trace.sample_rate_hz()),
        trace.label().replace('\n', " ")
    );
    for v in trace.samples() {
        out.push_str(&fmt_f64(*v));
        out.push('\n');
    }
    out
}

pub fn parse_voltage_trace(text: &str, path: &Path) -> Result<VoltageTrace> {
    let mut sample_rate = None;
    let mut label = String::new();
    for (i, line) in text.lines().enumerate() {
        if let Some(rest) = line.trim().strip_prefix("# sample_rate_hz=") {
            let (rate, rest) = rest.split_once(' ').unwrap_or((rest, ""));
            sample_rate = Some(parse_f64(path, i + 1, "sample_rate_hz", rate)?);
            label = rest.strip_prefix("label=").unwrap_or("").to_owned();
            break;
        }
    }
    let sample_rate = sample_rate
        .ok_or_else(|| AppError::parse(path, 1, "missing '# sample_rate_hz=<value> label=<text>' header"))?;
    let samples = data_lines(text)
        .map(|(n, l)| parse_f64(path, n, "voltage", l))
        .collect::<Result<Vec<_>>>()?;
    Ok(VoltageTrace::new(samples, sample_rate, label)?)
}

pub fn read_voltage_trace(path: &Path) -> Result<VoltageTrace> {
    parse_voltage_trace(&read_text(path)?, path)
}

pub fn render_counts(trace: &PhotonCountTrace, provenance: &Provenance) -> String {
    let mut out = provenance.header();
    for c in &trace.counts {
        let _ = writeln!(out, "{c}");
    }
    out
}

pub fn parse_counts(text: &str, path: &Path) -> Result<PhotonCountTrace> {
    let counts = data_lines(text)
        .map(|(n, l)| {
            l.parse::<u64>()
                .map_err(|_| AppError::parse(path, n, format!("photon_count: not a non-negative integer: {l:?}")))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PhotonCountTrace::new(counts)?)
}

pub fn read_counts(path: &Path) -> Result<PhotonCountTrace> {
    parse_counts(&read_text(path)?, path)
}

// ----------------------------------------------------------- calibration

pub const CALIBRATION_HEADER: &str = "photon_count,mean_voltage_v";

pub fn render_calibration_points(points: &[(f64, f64)], provenance: &Provenance) -> String {
    let mut out = provenance.header();
    out.push_str(CALIBRATION_HEADER);
    out.push('\n');
    for (n, v) in points {
        let _ = writeln!(out, "{},{}", fmt_f64(*n), fmt_f64(*v));
    }
    out
}

pub fn parse_calibration_points(text: &str, path: &Path) -> Result<Vec<(f64, f64)>> {
    let mut points = Vec::new();
    for (n, line) in data_lines(text) {
        if line.replace(' ', "") == CALIBRATION_HEADER {
            continue;
        }
        let (count, volts) = line
            .split_once(',')
            .ok_or_else(|| AppError::parse(path, n, "expected 'photon_count,mean_voltage_v'"))?;
        points.push((
            parse_f64(path, n, "photon_count", count)?,
            parse_f64(path, n, "mean_voltage_v", volts)?,
        ));
    }
    Ok(points)
}

pub fn read_calibration_points(path: &Path) -> Result<Vec<(f64, f64)>> {
    parse_calibration_points(&read_text(path)?, path)
}

// ------------------------------------------------------------ histograms

pub fn render_histogram<I>(rows: I, provenance: &Provenance) -> String
where
    I: IntoIterator<Item = (f64, f64)>,
{
    let mut out = provenance.header();
    out.push_str("value,frequency\n");
    for (value, frequency) in rows {
        let _ = writeln!(out, "{},{}", fmt_f64(value), fmt_f64(frequency));
    }
    out
}

pub fn parse_histogram(text: &str, path: &Path) -> Result<Vec<(f64, f64)>> {
    data_lines(text)
        .filter(|(_, l)| *l != "value,frequency")
        .map(|(n, l)| {
            let (v, f) = l
                .split_once(',')
                .ok_or_else(|| AppError::parse(path, n, "expected 'value,frequency'"))?;
            Ok((parse_f64(path, n, "value", v)?, parse_f64(path, n, "frequency", f)?))
        })
        .collect()
}

/// Merged levels with their photon ranges and the voltage of each level's
/// lower edge.
pub fn render_merged(merged: &MergedDistribution, delta_v0: f64, provenance: &Provenance) -> String {
    let mut out = provenance.header();
    let _ = writeln!(out, "# resolution_m={} offset={}", merged.resolution, merged.offset);
    out.push_str("level,photon_min,photon_max,voltage_v,probability\n");
    for (level, p) in merged.iter() {
        let (lo, hi) = merged.photon_range(level);
        let _ = writeln!(
            out,
            "{level},{lo},{hi},{},{}",
            fmt_f64(lo as f64 * delta_v0),
            fmt_f64(p)
        );
    }
    out
}

// ---------------------------------------------------------------- report

/// Flat and structured forms of an [`EntropyReport`] plus run context.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportDocument {
    pub h_theoretical_bits: f64,
    pub h_merged_bits: f64,
    pub h_empirical_bits: f64,
    pub resolution_m: u64,
    pub delta_v0_v: f64,
    pub deviation: f64,
    pub rate_bits_per_s: f64,
    pub mean_unique_gap_v: f64,
    pub sample_rate_hz: f64,
    pub mode_number: Option<f64>,
    pub mean_photons_per_mode: Option<f64>,
    pub sample_count: Option<u64>,
    pub provenance: Provenance,
}

impl ReportDocument {
    pub fn new(report: &EntropyReport, provenance: Provenance) -> Self {
        ReportDocument {
            h_theoretical_bits: report.h_theoretical,
            h_merged_bits: report.h_merged,
            h_empirical_bits: report.h_empirical,
            resolution_m: report.resolution.resolution_m,
            delta_v0_v: report.resolution.delta_v0,
            deviation: report.deviation,
            rate_bits_per_s: report.equivalent_rate_bits_per_s,
            mean_unique_gap_v: report.resolution.mean_unique_gap,
            sample_rate_hz: report.sample_rate_hz,
            mode_number: None,
            mean_photons_per_mode: None,
            sample_count: None,
            provenance,
        }
    }

    pub fn report(&self) -> EntropyReport {
        EntropyReport {
            h_theoretical: self.h_theoretical_bits,
            h_merged: self.h_merged_bits,
            h_empirical: self.h_empirical_bits,
            deviation: self.deviation,
            resolution: ResolutionEstimate {
                resolution_m: self.resolution_m,
                delta_v0: self.delta_v0_v,
                mean_unique_gap: self.mean_unique_gap_v,
            },
            sample_rate_hz: self.sample_rate_hz,
            equivalent_rate_bits_per_s: self.rate_bits_per_s,
        }
    }

    pub fn render_text(&self) -> String {
        let mut out = self.provenance.header();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(out, "{k} = {v}");
        };
        kv("h_theoretical_bits", fmt_f64(self.h_theoretical_bits));
        kv("h_merged_bits", fmt_f64(self.h_merged_bits));
        kv("h_empirical_bits", fmt_f64(self.h_empirical_bits));
        kv("resolution_m", self.resolution_m.to_string());
        kv("delta_v0_v", fmt_f64(self.delta_v0_v));
        kv("deviation", fmt_f64(self.deviation));
        kv("rate_bits_per_s", fmt_f64(self.rate_bits_per_s));
        kv("mean_unique_gap_v", fmt_f64(self.mean_unique_gap_v));
        kv("sample_rate_hz", fmt_f64(self.sample_rate_hz));
        if let Some(m) = self.mode_number {
            kv("mode_number", fmt_f64(m));
        }
        if let Some(n) = self.mean_photons_per_mode {
            kv("mean_photons_per_mode", fmt_f64(n));
        }
        if let Some(n) = self.sample_count {
            kv("sample_count", n.to_string());
        }
        out
    }

    pub fn parse_text(text: &str, path: &Path) -> Result<Self> {
        let provenance = text
            .lines()
            .next()
            .and_then(Provenance::parse)
            .unwrap_or_default();
        let mut values = BTreeMap::new();
        for (n, line) in data_lines(text) {
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| AppError::parse(path, n, "expected 'key = value'"))?;
            values.insert(k.trim().to_owned(), (n, v.trim().to_owned()));
        }
        let get = |key: &str| -> Result<f64> {
            let (n, v) = values
                .get(key)
                .ok_or_else(|| AppError::parse(path, 0, format!("missing key {key}")))?;
            parse_f64(path, *n, key, v)
        };
        let opt = |key: &str| values.contains_key(key).then(|| get(key)).transpose();
        Ok(ReportDocument {
            h_theoretical_bits: get("h_theoretical_bits")?,
            h_merged_bits: get("h_merged_bits")?,
            h_empirical_bits: get("h_empirical_bits")?,
            resolution_m: get("resolution_m")? as u64,
            delta_v0_v: get("delta_v0_v")?,
            deviation: get("deviation")?,
            rate_bits_per_s: get("rate_bits_per_s")?,
            mean_unique_gap_v: get("mean_unique_gap_v")?,
            sample_rate_hz: get("sample_rate_hz")?,
            mode_number: opt("mode_number")?,
            mean_photons_per_mode: opt("mean_photons_per_mode")?,
            sample_count: opt("sample_count")?.map(|v| v as u64),
            provenance,
        })
    }

    pub fn render_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

// ------------------------------------------------------------ bitstreams

/// Header of a packed bitstream file. `n`, `k` and the seed are present for
/// extractor output.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitstreamHeader {
    pub bits: usize,
    pub toeplitz: Option<(usize, usize, String)>,
}

const BITSTREAM_MARKER: &str = "# bitstream ";

pub fn pack_msb_first(bits: &Bits) -> Vec<u8> {
    let mut bytes = vec![0u8; bits.len().div_ceil(8)];
    for i in bits.iter_ones() {
        bytes[i / 8] |= 0x80 >> (i % 8);
    }
    bytes
}

pub fn unpack_msb_first(bytes: &[u8], len: usize) -> Bits {
    (0..len).map(|i| bytes[i / 8] & (0x80 >> (i % 8)) != 0).collect()
}

pub fn seed_hex(spec: &ToeplitzSpec) -> String {
    hex::encode(pack_msb_first(&spec.seed_bits().to_bitvec()))
}

pub fn write_bitstream<W: Write>(
    mut w: W,
    bits: &Bits,
    spec: Option<&ToeplitzSpec>,
    provenance: &Provenance,
) -> std::io::Result<()> {
    w.write_all(provenance.header().as_bytes())?;
    let mut line = format!("{BITSTREAM_MARKER}bits={}", bits.len());
    if let Some(spec) = spec {
        let _ = write!(
            line,
            " n={} k={} seed_bits={} seed={}",
            spec.input_block_bits(),
            spec.output_block_bits(),
            spec.seed_bits().len(),
            seed_hex(spec)
        );
    }
    line.push('\n');
    w.write_all(line.as_bytes())?;
    w.write_all(&pack_msb_first(bits))
}

pub fn read_bitstream(path: &Path) -> Result<(BitstreamHeader, Bits)> {
    let file = fs::File::open(path).map_err(|e| AppError::io(path, e))?;
    let mut reader = BufReader::new(file);
    let mut line = String::new();
    let mut line_no = 0;
    let header = loop {
        line.clear();
        line_no += 1;
        let read = reader.read_line(&mut line).map_err(|e| AppError::io(path, e))?;
        if read == 0 {
            return Err(AppError::parse(path, line_no, "missing '# bitstream' header line"));
        }
        if let Some(rest) = line.trim_end().strip_prefix(BITSTREAM_MARKER) {
            break parse_bitstream_header(rest, path, line_no)?;
        }
    };
    let mut bytes = Vec::new();
    reader.read_to_end(&mut bytes).map_err(|e| AppError::io(path, e))?;
    if bytes.len() != header.bits.div_ceil(8) {
        return Err(AppError::parse(
            path,
            line_no + 1,
            format!("expected {} data bytes, found {}", header.bits.div_ceil(8), bytes.len()),
        ));
    }
    let bits = unpack_msb_first(&bytes, header.bits);
    Ok((header, bits))
}

fn parse_bitstream_header(rest: &str, path: &Path, line: usize) -> Result<BitstreamHeader> {
    let fields: BTreeMap<&str, &str> = rest.split_whitespace().filter_map(|w| w.split_once('=')).collect();
    let int = |k: &str| -> Result<usize> {
        fields
            .get(k)
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| AppError::parse(path, line, format!("bitstream header: bad or missing {k}")))
    };
    let toeplitz = if fields.contains_key("n") {
        Some((int("n")?, int("k")?, fields.get("seed").copied().unwrap_or("").to_owned()))
    } else {
        None
    };
    Ok(BitstreamHeader {
        bits: int("bits")?,
        toeplitz,
    })
}

/// Seed bits recorded in an extractor bitstream header.
pub fn seed_from_header(header: &BitstreamHeader, path: &Path) -> Result<Option<ToeplitzSpec>> {
    let Some((n, k, hex_seed)) = &header.toeplitz else {
        return Ok(None);
    };
    let bytes = hex::decode(hex_seed).map_err(|e| AppError::parse(path, 0, format!("seed: {e}")))?;
    let seed_len = n + k - 1;
    if bytes.len() != seed_len.div_ceil(8) {
        return Err(AppError::parse(path, 0, "seed: length does not match n + k - 1"));
    }
    Ok(Some(ToeplitzSpec::new(*n, *k, unpack_msb_first(&bytes, seed_len))?))
}
