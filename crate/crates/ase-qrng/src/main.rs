use std::path::{Path, PathBuf};
use std::process::ExitCode;

use ase_qrng::config::ExperimentConfig;
use ase_qrng::core::detection::{calibrate_mapping, VoltageTrace};
use ase_qrng::core::entropy::{
    empirical_min_entropy, estimate_resolution_with, merge_distribution, min_entropy, ResolutionOptions,
};
use ase_qrng::core::extractor::{raw_bits_from_trace, random_bits, ToeplitzExtractor, ToeplitzSpec, DEFAULT_INPUT_BLOCK_BITS};
use ase_qrng::core::photon::{build_distribution, modal_model, ModalModel, OpticalSetup, DEFAULT_TAIL_TOLERANCE};
use ase_qrng::experiment::{self, write_atomic, REFERENCE_ROWS};
use ase_qrng::formats::{self, fmt_f64, Provenance, ReportDocument};
use ase_qrng::parallel;
use ase_qrng::stats::{self, BinSpec};
use ase_qrng::{AppError, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

#[derive(Parser, Debug)]
#[command(name = "ase-qrng", version, about = "ASE-noise QRNG simulation and min-entropy quantification")]
struct Cli {
    /// Experiment configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed; overrides the config's master_seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output file or directory, depending on the subcommand.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    /// Comment header plus `key = value` lines or CSV rows.
    Csv,
    /// JSON.
    Structured,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Mode number and mean photon numbers of a setup.
    Model(SetupArgs),
    /// Draw photon counts, one integer per line.
    Sample(SampleArgs),
    /// Run a full experiment from --config and write its artifacts to --out.
    Simulate(SimulateArgs),
    /// Fit volts per photon to `photon_count,mean_voltage_v` points.
    Calibrate {
        #[arg(long)]
        points: PathBuf,
    },
    /// Estimate the resolution m of a voltage trace.
    Resolution {
        #[arg(long)]
        trace: PathBuf,
        #[arg(long = "delta-v0")]
        delta_v0: f64,
        /// Fraction of sorted gaps dropped from each end.
        #[arg(long, default_value_t = 0.0)]
        trim: f64,
    },
    /// Min-entropy of a photon pmf, optionally merged, and of a trace.
    Entropy(EntropyArgs),
    /// Write the merged distribution as CSV.
    Merge(MergeArgs),
    /// Toeplitz-hash a trace or raw bitstream.
    Extract(ExtractArgs),
    /// Run a batch of experiments and summarize them.
    Report(ReportArgs),
    /// Mode number over a log-spaced grid of bandwidth ratios.
    Surface(SurfaceArgs),
    /// Distance between two voltage traces.
    Compare(CompareArgs),
}

#[derive(Args, Debug)]
struct SetupArgs {
    #[arg(long = "optical-bandwidth-hz")]
    optical_bandwidth_hz: Option<f64>,
    #[arg(long = "electrical-bandwidth-hz", default_value_t = 5e9)]
    electrical_bandwidth_hz: f64,
    #[arg(long = "polarization-degeneracy", default_value_t = 1)]
    polarization_degeneracy: u8,
    #[arg(long = "optical-power-w")]
    optical_power_w: Option<f64>,
    #[arg(long = "center-wavelength-m", default_value_t = 1550e-9)]
    center_wavelength_m: f64,
}

#[derive(Args, Debug)]
struct PmfArgs {
    /// Photon pmf as `nbar=<mean per mode>,M=<mode number>`; defaults to the
    /// setup of --config.
    #[arg(long = "pmf-from")]
    pmf_from: Option<String>,
    #[arg(long = "tail-tolerance", default_value_t = DEFAULT_TAIL_TOLERANCE)]
    tail_tolerance: f64,
}

#[derive(Args, Debug)]
struct SampleArgs {
    #[command(flatten)]
    pmf: PmfArgs,
    #[arg(long)]
    count: usize,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    /// Overrides the config's sample_count.
    #[arg(long)]
    count: Option<usize>,
}

#[derive(Args, Debug)]
struct EntropyArgs {
    #[command(flatten)]
    pmf: PmfArgs,
    /// Resolution m used to merge the pmf.
    #[arg(long)]
    merge: Option<u64>,
    /// Trace whose empirical min-entropy is reported alongside.
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct MergeArgs {
    #[command(flatten)]
    pmf: PmfArgs,
    #[arg(long)]
    merge: u64,
    #[arg(long = "delta-v0", default_value_t = experiment::REFERENCE_VOLTS_PER_PHOTON)]
    delta_v0: f64,
}

#[derive(Args, Debug)]
struct ExtractArgs {
    /// Voltage trace to rank-map into raw bits.
    #[arg(long, conflicts_with = "bits")]
    trace: Option<PathBuf>,
    /// Raw bitstream file.
    #[arg(long)]
    bits: Option<PathBuf>,
    #[arg(long = "bits-per-sample", default_value_t = 16)]
    bits_per_sample: u32,
    /// Min-entropy per sample; taken from --report when absent.
    #[arg(long = "h-min")]
    h_min: Option<f64>,
    /// Report file (key = value) providing h_merged_bits.
    #[arg(long)]
    report: Option<PathBuf>,
    #[arg(long = "block-bits", default_value_t = DEFAULT_INPUT_BLOCK_BITS)]
    block_bits: usize,
    /// Also write the raw (pre-extraction) bitstream here.
    #[arg(long = "raw-out")]
    raw_out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ReportArgs {
    /// Experiment configs; repeat for a batch.
    #[arg(long = "batch-config")]
    batch_config: Vec<PathBuf>,
    /// Run the six built-in reference setups.
    #[arg(long)]
    reference: bool,
    /// Samples per reference run.
    #[arg(long, default_value_t = 1_000_000)]
    count: usize,
}

#[derive(Args, Debug)]
struct SurfaceArgs {
    #[arg(long, default_value_t = 0.01)]
    rmin: f64,
    #[arg(long, default_value_t = 100.0)]
    rmax: f64,
    #[arg(long, default_value_t = 200)]
    points: usize,
    /// Polarization degeneracies, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "1,2")]
    s: Vec<u8>,
}

#[derive(Args, Debug)]
struct CompareArgs {
    #[arg(long)]
    a: PathBuf,
    #[arg(long)]
    b: PathBuf,
    /// Fixed bin width in volts; the union of observed levels when absent.
    #[arg(long = "bin-width")]
    bin_width: Option<f64>,
    /// Use trace a as the expected law for trace b.
    #[arg(long = "expected-from-a")]
    expected_from_a: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.machine_line());
            ExitCode::FAILURE
        }
    }
}

struct Context<'a> {
    cli: &'a Cli,
    config: Option<ExperimentConfig>,
    config_sha256: Option<String>,
}

impl Context<'_> {
    fn provenance(&self) -> Provenance {
        let seed = self.cli.seed.or(self.config.as_ref().map(|c| c.master_seed));
        Provenance::new(self.config_sha256.clone(), seed)
    }

    fn seed(&self) -> u64 {
        self.cli.seed.or(self.config.as_ref().map(|c| c.master_seed)).unwrap_or(0)
    }

    fn config(&self) -> Result<&ExperimentConfig> {
        self.config
            .as_ref()
            .ok_or_else(|| AppError::config("config", "this subcommand needs --config"))
    }

    /// Writes to --out when given, stdout otherwise.
    fn emit(&self, text: &str) -> Result<()> {
        match &self.cli.out {
            Some(path) => write_atomic(path, text.as_bytes()),
            None => {
                print!("{text}");
                Ok(())
            }
        }
    }

    fn emit_values(&self, provenance: &Provenance, values: &[(&str, serde_json::Value)]) -> Result<()> {
        self.emit(&self.render_values(provenance, values))
    }

    /// `key = value` lines under a provenance header, or one JSON object.
    fn render_values(&self, provenance: &Provenance, values: &[(&str, serde_json::Value)]) -> String {
        match self.cli.format {
            Format::Csv => {
                let mut out = provenance.header();
                for (k, v) in values {
                    let v = match v {
                        serde_json::Value::Number(n) => n.as_f64().filter(|_| !n.is_u64() && !n.is_i64()).map_or(n.to_string(), fmt_f64),
                        serde_json::Value::String(s) => s.clone(),
                        other => other.to_string(),
                    };
                    out.push_str(&format!("{k} = {v}\n"));
                }
                out
            }
            Format::Structured => {
                let mut map = serde_json::Map::new();
                for (k, v) in values {
                    map.insert((*k).to_owned(), v.clone());
                }
                map.insert("provenance".into(), serde_json::to_value(provenance).expect("serializable"));
                format!("{}\n", serde_json::to_string_pretty(&map).expect("serializable"))
            }
        }
    }
}

fn run(cli: &Cli) -> Result<()> {
    let (config, config_sha256) = match &cli.config {
        Some(path) => {
            let bytes = std::fs::read(path).map_err(|e| AppError::io(path, e))?;
            let mut config = ExperimentConfig::load(path)?;
            if let Some(seed) = cli.seed {
                config.master_seed = seed;
            }
            (Some(config), Some(formats::sha256_hex(&bytes)))
        }
        None => (None, None),
    };
    let ctx = Context {
        cli,
        config,
        config_sha256,
    };
    match &cli.command {
        Command::Model(args) => cmd_model(&ctx, args),
        Command::Sample(args) => cmd_sample(&ctx, args),
        Command::Simulate(args) => cmd_simulate(&ctx, args),
        Command::Calibrate { points } => cmd_calibrate(&ctx, points),
        Command::Resolution { trace, delta_v0, trim } => cmd_resolution(&ctx, trace, *delta_v0, *trim),
        Command::Entropy(args) => cmd_entropy(&ctx, args),
        Command::Merge(args) => cmd_merge(&ctx, args),
        Command::Extract(args) => cmd_extract(&ctx, args),
        Command::Report(args) => cmd_report(&ctx, args),
        Command::Surface(args) => cmd_surface(&ctx, args),
        Command::Compare(args) => cmd_compare(&ctx, args),
    }
}

/// Parses `nbar=<v>,M=<v>` (keys case-insensitive, any order).
fn parse_pmf_spec(spec: &str) -> Result<ModalModel> {
    let (mut n_bar, mut m) = (None, None);
    for part in spec.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (k, v) = part
            .split_once('=')
            .ok_or_else(|| AppError::config("pmf-from", format!("expected key=value, found {part:?}")))?;
        let v: f64 = v
            .trim()
            .parse()
            .map_err(|_| AppError::config("pmf-from", format!("{k}: not a number")))?;
        match k.trim().to_ascii_lowercase().as_str() {
            "nbar" | "n_bar" => n_bar = Some(v),
            "m" => m = Some(v),
            other => return Err(AppError::config("pmf-from", format!("unknown key {other:?}"))),
        }
    }
    let n_bar = n_bar.ok_or_else(|| AppError::config("pmf-from", "missing nbar"))?;
    let m = m.ok_or_else(|| AppError::config("pmf-from", "missing M"))?;
    Ok(ModalModel::new(m, n_bar)?)
}

fn resolve_model(ctx: &Context, args: &PmfArgs) -> Result<ModalModel> {
    match &args.pmf_from {
        Some(spec) => parse_pmf_spec(spec),
        None => Ok(modal_model(&ctx.config()?.setup)?),
    }
}

fn pmf_provenance(ctx: &Context, args: &PmfArgs) -> Provenance {
    let mut p = ctx.provenance();
    if let Some(spec) = &args.pmf_from {
        p = p.with("pmf_from", spec.replace(' ', ""));
    }
    if args.tail_tolerance != DEFAULT_TAIL_TOLERANCE {
        p = p.with("tail_tolerance", fmt_f64(args.tail_tolerance));
    }
    p
}

fn cmd_model(ctx: &Context, args: &SetupArgs) -> Result<()> {
    let setup = match (&ctx.config, args.optical_bandwidth_hz, args.optical_power_w) {
        (_, Some(b_opt), Some(power)) => OpticalSetup::new(
            b_opt,
            args.electrical_bandwidth_hz,
            args.polarization_degeneracy,
            power,
            args.center_wavelength_m,
        )?,
        (Some(config), None, None) => config.setup,
        _ => {
            return Err(AppError::config(
                "optical-bandwidth-hz",
                "give --config, or both --optical-bandwidth-hz and --optical-power-w",
            ))
        }
    };
    let model = modal_model(&setup)?;
    let provenance = ctx
        .provenance()
        .with("optical_bandwidth_hz", fmt_f64(setup.optical_bandwidth_hz))
        .with("electrical_bandwidth_hz", fmt_f64(setup.electrical_bandwidth_hz))
        .with("polarization_degeneracy", setup.polarization_degeneracy)
        .with("optical_power_w", fmt_f64(setup.optical_power_w))
        .with("center_wavelength_m", fmt_f64(setup.center_wavelength_m));
    ctx.emit_values(
        &provenance,
        &[
            ("bandwidth_ratio", json!(setup.bandwidth_ratio())),
            ("mode_number", json!(model.mode_number)),
            ("mean_photons_per_mode", json!(model.mean_photons_per_mode)),
            ("mean_photons_total", json!(model.mean_photons_total)),
            ("variance", json!(model.variance())),
        ],
    )
}

fn cmd_sample(ctx: &Context, args: &SampleArgs) -> Result<()> {
    let model = resolve_model(ctx, &args.pmf)?;
    let distribution = build_distribution(&model, args.pmf.tail_tolerance)?;
    let trace = parallel::sample_parallel(&distribution, args.count, ctx.seed())?;
    let provenance = pmf_provenance(ctx, &args.pmf).with("count", args.count);
    let provenance = Provenance { seed: Some(ctx.seed()), ..provenance };
    match ctx.cli.format {
        Format::Csv => ctx.emit(&formats::render_counts(&trace, &provenance)),
        Format::Structured => ctx.emit(&format!(
            "{}\n",
            json!({ "counts": trace.counts, "provenance": provenance })
        )),
    }
}

fn cmd_simulate(ctx: &Context, args: &SimulateArgs) -> Result<()> {
    let mut config = ctx.config()?.clone();
    if let Some(count) = args.count {
        config.sample_count = count;
    }
    if let Some(out) = &ctx.cli.out {
        config.outputs = out.clone();
    }
    let outcome = experiment::run_experiment(&config)?;
    let doc = &outcome.run.document;
    match ctx.cli.format {
        Format::Csv => print!("{}", doc.render_text()),
        Format::Structured => print!("{}", doc.render_json()),
    }
    Ok(())
}

fn cmd_calibrate(ctx: &Context, points: &Path) -> Result<()> {
    let data = formats::read_calibration_points(points)?;
    let calibration = calibrate_mapping(&data)?;
    ctx.emit_values(
        &ctx.provenance().with("points", points.display()),
        &[
            ("volts_per_photon", json!(calibration.volts_per_photon)),
            ("delta_v0_v", json!(calibration.delta_v0())),
            ("fit_residual_relative_max", json!(calibration.fit_residual_relative_max)),
            ("points", json!(data.len())),
        ],
    )
}

fn cmd_resolution(ctx: &Context, trace: &Path, delta_v0: f64, trim: f64) -> Result<()> {
    let t = formats::read_voltage_trace(trace)?;
    let estimate = estimate_resolution_with(&t, delta_v0, &ResolutionOptions { trim_fraction: trim })?;
    let mut provenance = ctx.provenance().with("delta_v0", fmt_f64(delta_v0));
    if trim > 0.0 {
        provenance = provenance.with("trim", fmt_f64(trim));
    }
    ctx.emit_values(
        &provenance,
        &[
            ("resolution_m", json!(estimate.resolution_m)),
            ("mean_unique_gap_v", json!(estimate.mean_unique_gap)),
            ("delta_v0_v", json!(delta_v0)),
        ],
    )
}

fn cmd_entropy(ctx: &Context, args: &EntropyArgs) -> Result<()> {
    let model = resolve_model(ctx, &args.pmf)?;
    let distribution = build_distribution(&model, args.pmf.tail_tolerance)?;
    let mut provenance = pmf_provenance(ctx, &args.pmf);
    let mut values = vec![
        ("mode_number", json!(model.mode_number)),
        ("mean_photons_per_mode", json!(model.mean_photons_per_mode)),
        ("max_probability", json!(distribution.max_probability())),
        ("h_theoretical_bits", json!(min_entropy(&distribution)?)),
    ];
    if let Some(m) = args.merge {
        provenance = provenance.with("merge", m);
        let merged = merge_distribution(&distribution, m)?;
        values.push(("resolution_m", json!(m)));
        values.push(("h_merged_bits", json!(min_entropy(&merged)?)));
    }
    if let Some(path) = &args.trace {
        provenance = provenance.with("trace", path.display());
        values.push(("h_empirical_bits", json!(empirical_min_entropy(&formats::read_voltage_trace(path)?)?)));
    }
    ctx.emit_values(&provenance, &values)
}

fn cmd_merge(ctx: &Context, args: &MergeArgs) -> Result<()> {
    let model = resolve_model(ctx, &args.pmf)?;
    let distribution = build_distribution(&model, args.pmf.tail_tolerance)?;
    let merged = merge_distribution(&distribution, args.merge)?;
    let provenance = pmf_provenance(ctx, &args.pmf)
        .with("merge", args.merge)
        .with("delta_v0", fmt_f64(args.delta_v0));
    match ctx.cli.format {
        Format::Csv => ctx.emit(&formats::render_merged(&merged, args.delta_v0, &provenance)),
        Format::Structured => ctx.emit(&format!(
            "{}\n",
            json!({
                "resolution_m": merged.resolution,
                "first_level": merged.first_level,
                "probabilities": merged.probabilities,
                "h_merged_bits": min_entropy(&merged)?,
                "provenance": provenance,
            })
        )),
    }
}

fn cmd_extract(ctx: &Context, args: &ExtractArgs) -> Result<()> {
    let out = ctx
        .cli
        .out
        .as_ref()
        .ok_or_else(|| AppError::config("out", "extract writes a binary file and needs --out"))?;
    let mut provenance = ctx.provenance().with("bits_per_sample", args.bits_per_sample).with("block_bits", args.block_bits);
    let raw = match (&args.trace, &args.bits) {
        (Some(path), None) => {
            provenance = provenance.with("trace", path.display());
            raw_bits_from_trace(&formats::read_voltage_trace(path)?, args.bits_per_sample)?
        }
        (None, Some(path)) => {
            provenance = provenance.with("bits", path.display());
            formats::read_bitstream(path)?.1
        }
        _ => return Err(AppError::config("trace", "give exactly one of --trace or --bits")),
    };
    let h_min = match (args.h_min, &args.report) {
        (Some(h), _) => h,
        (None, Some(path)) => {
            let text = std::fs::read_to_string(path).map_err(|e| AppError::io(path, e))?;
            ReportDocument::parse_text(&text, path)?.h_merged_bits
        }
        (None, None) => return Err(AppError::config("h-min", "give --h-min or --report")),
    };
    provenance = provenance.with("h_min", fmt_f64(h_min));
    let k = ToeplitzSpec::output_bits_for(h_min, args.bits_per_sample, args.block_bits);
    if k == 0 {
        return Err(AppError::config("h-min", "entropy bound leaves no output bits per block"));
    }
    let seed_bits = random_bits(args.block_bits + k - 1, ctx.seed());
    let spec = ToeplitzSpec::with_entropy_bound(args.block_bits, k, seed_bits, h_min, args.bits_per_sample)?;
    let extractor = ToeplitzExtractor::new(spec);
    let extracted = parallel::extract_parallel(&extractor, &raw);
    if extracted.discarded_bits > 0 {
        eprintln!("warning kind=partial_block discarded_bits={}", extracted.discarded_bits);
    }
    let provenance = Provenance { seed: Some(ctx.seed()), ..provenance };
    let mut bytes = Vec::new();
    formats::write_bitstream(&mut bytes, &extracted.bits, Some(extractor.spec()), &provenance)
        .map_err(|e| AppError::io(out, e))?;
    write_atomic(out, &bytes)?;
    if let Some(raw_out) = &args.raw_out {
        let mut bytes = Vec::new();
        formats::write_bitstream(&mut bytes, &raw, None, &provenance).map_err(|e| AppError::io(raw_out, e))?;
        write_atomic(raw_out, &bytes)?;
    }
    let (fraction, z) = stats::monobit(extracted.bits.count_ones(), extracted.bits.len().max(1));
    let summary = [
        ("input_block_bits", json!(args.block_bits)),
        ("output_block_bits", json!(k)),
        ("raw_bits", json!(raw.len())),
        ("output_bits", json!(extracted.bits.len())),
        ("discarded_bits", json!(extracted.discarded_bits)),
        ("monobit_fraction", json!(fraction)),
        ("monobit_z", json!(z)),
    ];
    print!("{}", ctx.render_values(&provenance, &summary));
    Ok(())
}

fn cmd_report(ctx: &Context, args: &ReportArgs) -> Result<()> {
    let out_dir = ctx.cli.out.clone().unwrap_or_else(|| PathBuf::from("ase-qrng-report"));
    let mut configs = Vec::new();
    for path in &args.batch_config {
        let mut c = ExperimentConfig::load(path)?;
        if let Some(seed) = ctx.cli.seed {
            c.master_seed = seed;
        }
        configs.push(c);
    }
    if let Some(c) = &ctx.config {
        configs.insert(0, c.clone());
    }
    if args.reference {
        for (i, row) in REFERENCE_ROWS.iter().enumerate() {
            let text = row.config_text(args.count, ctx.seed(), &out_dir.join(format!("row{}", i + 1)));
            configs.push(ExperimentConfig::parse(&text, Path::new("."))?);
        }
    }
    if configs.is_empty() {
        return Err(AppError::config("config", "give --config, --batch-config or --reference"));
    }
    let mut runs = Vec::with_capacity(configs.len());
    for config in &configs {
        runs.push(experiment::run_experiment(config)?.run);
    }
    let provenance = ctx.provenance().with("runs", runs.len());
    let text = match ctx.cli.format {
        Format::Csv => experiment::render_batch_summary(&runs, &provenance),
        Format::Structured => format!(
            "{}\n",
            json!({
                "runs": runs.iter().map(|r| &r.document).collect::<Vec<_>>(),
                "provenance": provenance,
            })
        ),
    };
    write_atomic(&out_dir.join("summary.csv"), text.as_bytes())?;
    print!("{text}");
    Ok(())
}

fn cmd_surface(ctx: &Context, args: &SurfaceArgs) -> Result<()> {
    let rows = experiment::emit_mode_number_surface(args.rmin, args.rmax, args.points, &args.s)?;
    let provenance = ctx
        .provenance()
        .with("rmin", fmt_f64(args.rmin))
        .with("rmax", fmt_f64(args.rmax))
        .with("points", args.points);
    match ctx.cli.format {
        Format::Csv => ctx.emit(&experiment::render_surface(&rows, &provenance)),
        Format::Structured => ctx.emit(&format!(
            "{}\n",
            json!({
                "rows": rows.iter().map(|(r, s, m)| json!({"r": r, "s": s, "M": m})).collect::<Vec<_>>(),
                "provenance": provenance,
            })
        )),
    }
}

fn cmd_compare(ctx: &Context, args: &CompareArgs) -> Result<()> {
    let a: VoltageTrace = formats::read_voltage_trace(&args.a)?;
    let b = formats::read_voltage_trace(&args.b)?;
    let bins = args.bin_width.map_or(BinSpec::UnionOfLevels, BinSpec::FixedWidth);
    let result = stats::compare_traces(&a, &b, bins, args.expected_from_a)?;
    let mut provenance = ctx.provenance().with("a", args.a.display()).with("b", args.b.display());
    if let Some(w) = args.bin_width {
        provenance = provenance.with("bin_width", fmt_f64(w));
    }
    ctx.emit_values(
        &provenance,
        &[
            ("total_variation", json!(result.total_variation)),
            ("chi_square", json!(result.chi_square.statistic)),
            ("dof", json!(result.chi_square.dof)),
            ("p_value", json!(result.chi_square.p_value)),
            ("bins", json!(result.bins)),
        ],
    )
}
