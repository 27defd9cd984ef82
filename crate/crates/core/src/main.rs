//! Command-line frontend tying the pipeline together: synthesize or ingest
//! tide records, derive datums, extract wave patterns, build exceedance
//! CCDFs, compose hazard curves, and compare methods. Every command writes a
//! `<output>.manifest.json` provenance record next to its output.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use tideprob::ccdf::{
    build_phi0, build_phi_dt, build_phi_g_direct, build_phi_pattern, mofjeld_params, read_ccdf_csv,
    BinSpec, CcdfTable,
};
use tideprob::error::{Error, Result};
use tideprob::hazard::{
    compare_fields, hazard_grid, read_hazard_csv, write_diff_csv, write_hazard_csv,
    ExceedanceLevels, PsiMode,
};
use tideprob::manifest::RunManifest;
use tideprob::pattern::{extract_pattern, read_gauge_csv, ExtractParams, WavePattern, WidthRule};
use tideprob::preset::SitePreset;
use tideprob::stage::{read_ztable_csv, Extrapolation, StageDomain};
use tideprob::tide::{
    compute_datums, ingest_tide_csv, read_constituents_csv, synthesize_tide, GapPolicy,
    IngestOptions, TideRecord,
};

#[derive(Parser)]
#[command(
    name = "tideprob",
    version,
    about = "Tidal-stage uncertainty for probabilistic tsunami hazard assessment"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Derive site datums from a tide record
    Datums(DatumsArgs),
    /// Synthesize a tide record from harmonic constituents
    Synth(SynthArgs),
    /// Extract a square-wave pattern from a simulated gauge series
    #[command(name = "pattern-extract")]
    PatternExtract(PatternExtractArgs),
    /// Build a tide-exceedance CCDF table
    Phi(PhiArgs),
    /// Compose a Z-table and a CCDF table into hazard curves
    Hazard(HazardArgs),
    /// Compare two hazard CSVs cell by cell
    Compare(CompareArgs),
}

#[derive(clap::Args)]
struct DatumsArgs {
    /// Tide CSV (`timestamp,level_m`, one row per minute)
    tide_csv: PathBuf,
    #[arg(short, long)]
    output: PathBuf,
    /// Subtract the record mean before computing datums
    #[arg(long)]
    rebase: bool,
    /// Largest gap (minutes) filled by linear interpolation
    #[arg(long, default_value_t = 120)]
    gap_max_minutes: i64,
    /// Treat any gap as an error
    #[arg(long)]
    gap_fail: bool,
    /// Site label recorded on the ingested record
    #[arg(long, default_value = "")]
    site: String,
}

#[derive(clap::Args)]
struct SynthArgs {
    /// Constituent CSV (`name,amplitude_m,speed_deg_per_hr,phase_deg`)
    constituents_csv: PathBuf,
    /// Record length in days
    #[arg(long)]
    days: f64,
    /// Constant offset added to the synthesized levels
    #[arg(long, default_value_t = 0.0)]
    msl_offset: f64,
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(clap::Args)]
struct PatternExtractArgs {
    /// Gauge CSV (`t_min,eta_m` with a `# run_stage_m=` line)
    gauge_csv: PathBuf,
    /// Wave detection threshold as a fraction of the tallest crest
    #[arg(long, default_value_t = 0.25)]
    threshold_fraction: f64,
    /// Runs closer than this many minutes merge into one wave
    #[arg(long, default_value_t = 20.0)]
    min_gap_minutes: f64,
    #[arg(long, value_enum, default_value_t = WidthRuleArg::HalfAmplitude)]
    width_rule: WidthRuleArg,
    /// Source label stored in the pattern file
    #[arg(long, default_value = "extracted")]
    source: String,
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum WidthRuleArg {
    /// Span of samples above half the wave's crest height
    #[value(name = "half-amplitude")]
    HalfAmplitude,
    /// Span of the thresholded run itself
    #[value(name = "full-run")]
    FullRun,
}

#[derive(clap::Args)]
struct PhiArgs {
    /// Tide CSV; required for every method except g_erf
    tide_csv: Option<PathBuf>,
    #[arg(long, value_enum)]
    method: PhiMethod,
    /// Window length in minutes (method dt)
    #[arg(long)]
    dt_min: Option<u32>,
    /// Pattern JSON file (method pattern)
    #[arg(long)]
    pattern_file: Option<PathBuf>,
    /// Proxy amplitude in meters (methods g_direct, g_erf)
    #[arg(long)]
    amp: Option<f64>,
    /// Site preset name or JSON path (methods g_direct, g_erf)
    #[arg(long)]
    preset: Option<String>,
    #[arg(long, default_value_t = BinSpec::DEFAULT_WIDTH)]
    bin_width: f64,
    /// Worker thread cap; output is identical for any value
    #[arg(long)]
    threads: Option<usize>,
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Clone, Copy, ValueEnum, PartialEq)]
enum PhiMethod {
    #[value(name = "phi0")]
    Phi0,
    #[value(name = "dt")]
    Dt,
    #[value(name = "pattern")]
    Pattern,
    #[value(name = "g_direct")]
    GDirect,
    #[value(name = "g_erf")]
    GErf,
}

#[derive(clap::Args)]
struct HazardArgs {
    /// Z-table CSV (`lon,lat,bathy_m,stage:<s1>,...`)
    ztable_csv: PathBuf,
    /// CCDF table CSV produced by `tideprob phi`
    phi_csv: PathBuf,
    #[arg(long, value_enum, default_value_t = ModeArg::Infimum)]
    mode: ModeArg,
    /// Site preset supplying the stage domain and default levels
    #[arg(long)]
    preset: Option<String>,
    /// Explicit stage domain `lo,hi` (overrides the preset)
    #[arg(long)]
    domain: Option<String>,
    #[arg(long, value_enum, default_value_t = ExtrapArg::Linear)]
    extrapolation: ExtrapArg,
    /// Clamp extrapolated QoI values from below (e.g. 0 for depths)
    #[arg(long)]
    qoi_floor: Option<f64>,
    /// Comma-separated exceedance levels (default: preset's, else standard)
    #[arg(long)]
    levels: Option<String>,
    #[arg(long)]
    threads: Option<usize>,
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    #[value(name = "infimum")]
    Infimum,
    #[value(name = "interval_sum")]
    IntervalSum,
}

#[derive(Clone, Copy, ValueEnum)]
enum ExtrapArg {
    #[value(name = "linear")]
    Linear,
    #[value(name = "clamp")]
    Clamp,
}

#[derive(clap::Args)]
struct CompareArgs {
    hazard_a: PathBuf,
    hazard_b: PathBuf,
    #[arg(short, long)]
    output: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Datums(args) => cmd_datums(args),
        Command::Synth(args) => cmd_synth(args),
        Command::PatternExtract(args) => cmd_pattern_extract(args),
        Command::Phi(args) => cmd_phi(args),
        Command::Hazard(args) => cmd_hazard(args),
        Command::Compare(args) => cmd_compare(args),
    }
}

fn open(path: &Path) -> Result<BufReader<File>> {
    Ok(BufReader::new(File::open(path).map_err(|e| {
        Error::InvalidParameter(format!("cannot open {}: {e}", path.display()))
    })?))
}

fn load_tide(path: &Path, opts: &IngestOptions) -> Result<TideRecord> {
    let record = ingest_tide_csv(open(path)?, opts)?;
    for w in record.warnings() {
        eprintln!("warning: {w}");
    }
    Ok(record)
}

/// Run `f` under a rayon pool capped at `threads` workers. Results are
/// byte-identical for any cap; this only bounds parallelism.
fn with_threads<T>(threads: Option<usize>, f: impl FnOnce() -> Result<T> + Send) -> Result<T>
where
    T: Send,
{
    match threads {
        None => f(),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?
            .install(f),
    }
}

fn write_output(path: &Path, body: &[u8]) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    out.write_all(body)?;
    out.flush()?;
    Ok(())
}

fn finish_manifest(mut manifest: RunManifest, inputs: &[&Path], output: &Path) -> Result<()> {
    for input in inputs {
        manifest.record_input(input)?;
    }
    manifest.record_output(output);
    manifest.write_alongside(output)?;
    Ok(())
}

fn cmd_datums(args: DatumsArgs) -> Result<()> {
    let manifest = RunManifest::from_env_args();
    let opts = IngestOptions {
        gap: if args.gap_fail {
            GapPolicy::Fail
        } else {
            GapPolicy::Interpolate {
                max_minutes: args.gap_max_minutes,
            }
        },
        rebase_to_mean: args.rebase,
        site_label: args.site.clone(),
        ..Default::default()
    };
    let record = load_tide(&args.tide_csv, &opts)?;
    let datums = compute_datums(&record)?;
    let mut body = Vec::new();
    datums.write_report(&mut body)?;
    write_output(&args.output, &body)?;
    finish_manifest(manifest, &[&args.tide_csv], &args.output)
}

fn cmd_synth(args: SynthArgs) -> Result<()> {
    let manifest = RunManifest::from_env_args();
    let constituents = read_constituents_csv(open(&args.constituents_csv)?)?;
    let record = synthesize_tide(&constituents, args.days, args.msl_offset)?;
    let mut body = Vec::new();
    record.write_csv(&mut body)?;
    write_output(&args.output, &body)?;
    finish_manifest(manifest, &[&args.constituents_csv], &args.output)
}

fn cmd_pattern_extract(args: PatternExtractArgs) -> Result<()> {
    let manifest = RunManifest::from_env_args();
    let gauge = read_gauge_csv(open(&args.gauge_csv)?)?;
    let params = ExtractParams {
        threshold_fraction: args.threshold_fraction,
        min_gap_minutes: args.min_gap_minutes,
        width_rule: match args.width_rule {
            WidthRuleArg::HalfAmplitude => WidthRule::HalfAmplitude,
            WidthRuleArg::FullRun => WidthRule::FullRun,
        },
        source: args.source.clone(),
    };
    let pattern = extract_pattern(&gauge, &params)?;
    let mut body = pattern.to_json()?.into_bytes();
    body.push(b'\n');
    write_output(&args.output, &body)?;
    finish_manifest(manifest, &[&args.gauge_csv], &args.output)
}

fn cmd_phi(args: PhiArgs) -> Result<()> {
    let manifest = RunManifest::from_env_args();
    let mut inputs: Vec<&Path> = Vec::new();

    let need_tide = args.method != PhiMethod::GErf;
    let tide = match (&args.tide_csv, need_tide) {
        (Some(path), _) => {
            inputs.push(path);
            Some(load_tide(path, &IngestOptions::default())?)
        }
        (None, true) => {
            return Err(Error::InvalidParameter(
                "this method needs a tide CSV argument".to_string(),
            ))
        }
        (None, false) => None,
    };

    let preset = args.preset.as_deref().map(SitePreset::load).transpose()?;

    let pattern = match (&args.pattern_file, args.method) {
        (Some(path), PhiMethod::Pattern) => {
            inputs.push(path);
            Some(WavePattern::from_json(&std::fs::read_to_string(path)?)?)
        }
        (None, PhiMethod::Pattern) => {
            return Err(Error::InvalidParameter(
                "--method pattern needs --pattern-file".to_string(),
            ))
        }
        _ => None,
    };

    let table: CcdfTable = with_threads(args.threads, || match args.method {
        PhiMethod::Phi0 => {
            let rec = tide.as_ref().expect("validated");
            build_phi0(rec, BinSpec::for_record(rec, 0.0, args.bin_width)?)
        }
        PhiMethod::Dt => {
            let rec = tide.as_ref().expect("validated");
            let dt = args
                .dt_min
                .ok_or_else(|| Error::InvalidParameter("--method dt needs --dt-min".to_string()))?;
            build_phi_dt(rec, dt, BinSpec::for_record(rec, 0.0, args.bin_width)?)
        }
        PhiMethod::Pattern => {
            let rec = tide.as_ref().expect("validated");
            let p = pattern.as_ref().expect("validated");
            build_phi_pattern(
                rec,
                p,
                BinSpec::for_record(rec, p.max_offset(), args.bin_width)?,
            )
        }
        PhiMethod::GDirect => {
            let rec = tide.as_ref().expect("validated");
            let amp = args.amp.ok_or_else(|| {
                Error::InvalidParameter("--method g_direct needs --amp".to_string())
            })?;
            let preset = preset.as_ref().ok_or_else(|| {
                Error::InvalidParameter("--method g_direct needs --preset".to_string())
            })?;
            // The template offset peaks near twice the amplitude.
            let bins = BinSpec::for_record(rec, 2.0 * amp, args.bin_width)?;
            build_phi_g_direct(rec, amp, &preset.g_params, bins)
        }
        PhiMethod::GErf => {
            let amp = args
                .amp
                .ok_or_else(|| Error::InvalidParameter("--method g_erf needs --amp".to_string()))?;
            let preset = preset.as_ref().ok_or_else(|| {
                Error::InvalidParameter("--method g_erf needs --preset".to_string())
            })?;
            let m = mofjeld_params(amp, &preset.g_params, &preset.datums)?;
            let bins = BinSpec::covering(
                preset.datums.xi_lowest,
                preset.datums.xi_highest,
                0.0,
                args.bin_width,
            )?;
            CcdfTable::from_moments_erf(&m, bins, &format!("g_erf:{amp}"))
        }
    })?;

    let mut extra = Vec::new();
    if let Ok(m) = table.moments() {
        extra.push(("xi0_m", format!("{:.6}", m.xi0)));
        extra.push(("sigma_m", format!("{:.6}", m.sigma)));
    }
    let mut body = Vec::new();
    table.write_csv(&mut body, &extra)?;
    write_output(&args.output, &body)?;
    finish_manifest(manifest, &inputs, &args.output)
}

fn cmd_hazard(args: HazardArgs) -> Result<()> {
    let manifest = RunManifest::from_env_args();
    let phi = read_ccdf_csv(open(&args.phi_csv)?)?;
    let responses = read_ztable_csv(
        open(&args.ztable_csv)?,
        match args.extrapolation {
            ExtrapArg::Linear => Extrapolation::LinearContinuation,
            ExtrapArg::Clamp => Extrapolation::Clamp,
        },
        args.qoi_floor,
    )?;

    let preset = args.preset.as_deref().map(SitePreset::load).transpose()?;

    let domain = if let Some(spec) = &args.domain {
        let (lo, hi) = spec.split_once(',').ok_or_else(|| {
            Error::InvalidParameter(format!("--domain expects 'lo,hi', got '{spec}'"))
        })?;
        StageDomain::new(
            lo.trim()
                .parse()
                .map_err(|e| Error::InvalidParameter(format!("bad domain low '{lo}': {e}")))?,
            hi.trim()
                .parse()
                .map_err(|e| Error::InvalidParameter(format!("bad domain high '{hi}': {e}")))?,
        )?
    } else if let Some(p) = &preset {
        StageDomain::from_datums(&p.datums)?
    } else {
        let (lo, hi) = phi.support();
        StageDomain::new(lo, hi)?
    };

    let levels = if let Some(spec) = &args.levels {
        let values: Vec<f64> = spec
            .split(',')
            .map(|s| {
                s.trim()
                    .parse()
                    .map_err(|e| Error::InvalidParameter(format!("bad level '{s}': {e}")))
            })
            .collect::<Result<_>>()?;
        ExceedanceLevels::new(values)?
    } else if let Some(p) = &preset {
        p.levels()
    } else {
        ExceedanceLevels::standard()
    };

    let (support_lo, support_hi) = phi.support();
    let plausible = preset
        .as_ref()
        .map(|p| (p.datums.xi_lowest - 1.0, p.datums.xi_highest + 1.0));
    for sr in &responses {
        for s in sr.samples() {
            if s.stage < support_lo || s.stage > support_hi {
                eprintln!(
                    "warning: stage {} at ({}, {}) lies outside the CCDF support \
                     [{support_lo:.3}, {support_hi:.3}]; evaluation clamps to 1/0 there",
                    s.stage,
                    sr.location().lon,
                    sr.location().lat
                );
            } else if let Some((lo, hi)) = plausible {
                if s.stage < lo || s.stage > hi {
                    eprintln!(
                        "warning: stage {} at ({}, {}) is more than 1 m beyond the site's \
                         observed tide range [{:.3}, {:.3}]",
                        s.stage,
                        sr.location().lon,
                        sr.location().lat,
                        lo + 1.0,
                        hi - 1.0
                    );
                }
            }
        }
    }

    let mode = match args.mode {
        ModeArg::Infimum => PsiMode::Infimum,
        ModeArg::IntervalSum => PsiMode::IntervalSum,
    };
    let field = with_threads(args.threads, || {
        hazard_grid(&responses, &phi, &levels, mode, domain)
    })?;
    let mut body = Vec::new();
    write_hazard_csv(&field, &mut body)?;
    write_output(&args.output, &body)?;
    finish_manifest(manifest, &[&args.ztable_csv, &args.phi_csv], &args.output)
}

fn cmd_compare(args: CompareArgs) -> Result<()> {
    let manifest = RunManifest::from_env_args();
    let a = read_hazard_csv(open(&args.hazard_a)?)?;
    let b = read_hazard_csv(open(&args.hazard_b)?)?;
    let diff = compare_fields(&a, &b)?;
    let mut body = Vec::new();
    write_diff_csv(&diff, &mut body)?;
    write_output(&args.output, &body)?;
    println!(
        "max_diff={:.6}, min_diff={:.6}",
        diff.max_diff, diff.min_diff
    );
    finish_manifest(manifest, &[&args.hazard_a, &args.hazard_b], &args.output)
}
