use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, ValueEnum};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use windscale::analysis::{
    acf_with_band, compare_series, increment_moments, pdf_histogram, spectrum, window_mass, ComparisonOptions, Histogram,
    Moments, SeriesComparison,
};
use windscale::calibration::{calibrate as run_calibration, CalibrationConfig, CalibrationMode, CalibrationResult, PEAK_WINDOWS};
use windscale::cleansing::{cleanse as run_cleanse, CleansingReport};
use windscale::dfa::{default_scales, fit_alpha, fit_alpha_all, fit_crossover, fluctuation, ScalingFit};
use windscale::fgn::{self, FgnSpec, Method};
use windscale::io::{export, ingest, parse_timestamp, write_table, IngestStats, Report, RunConfig};
use windscale::model::{simulate as run_simulation, ModelParams, TransitionStats};
use windscale::series::{increments, standardize, STEP_SECONDS};
use windscale::{Error, TurbineSeries};

/// Failure classes with stable exit codes.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Data(String),
    Numerical(String),
}

impl CliError {
    pub fn code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Data(_) => 3,
            CliError::Numerical(_) => 4,
        }
    }

    pub fn report(&self) -> ExitCode {
        let (kind, msg) = match self {
            CliError::Config(m) => ("configuration error", m),
            CliError::Data(m) => ("data error", m),
            CliError::Numerical(m) => ("numerical failure", m),
        };
        eprintln!("windscale: {kind}: {msg}");
        ExitCode::from(self.code())
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let msg = e.to_string();
        match e {
            Error::InvalidArgument(_) | Error::Json(_) => CliError::Config(msg),
            Error::Ingest { .. } | Error::DuplicateTimestamp { .. } | Error::Csv(_) | Error::Io(_) => CliError::Data(msg),
            _ if e.is_numerical() => CliError::Numerical(msg),
            _ => CliError::Data(msg),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

pub struct Context {
    pub run: RunConfig,
}

impl Context {
    pub fn load(config: Option<&Path>, seed: Option<u64>) -> CliResult<Self> {
        let mut run = match config {
            Some(p) if !p.exists() => return Err(CliError::Config(format!("config file not found: {}", p.display()))),
            Some(p) => RunConfig::load(p).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?,
            None => RunConfig::default(),
        };
        if seed.is_some() {
            run.seed = seed;
        }
        run.check(false).map_err(|e| CliError::Config(e.to_string()))?;
        Ok(Self { run })
    }

    fn seed(&self) -> CliResult<u64> {
        self.run.seed.ok_or_else(|| CliError::Config("this command is stochastic; pass --seed or set \"seed\" in the config".into()))
    }

    fn inputs(&self, flags: &[PathBuf]) -> CliResult<Vec<PathBuf>> {
        let inputs = if flags.is_empty() { self.run.inputs.clone() } else { flags.to_vec() };
        if inputs.is_empty() {
            return Err(CliError::Config("no input files; pass --input or set \"inputs\" in the config".into()));
        }
        if let Some(p) = inputs.iter().find(|p| !p.exists()) {
            return Err(CliError::Config(format!("input not found: {}", p.display())));
        }
        Ok(inputs)
    }

    fn out_dir(&self, flag: &Option<PathBuf>) -> CliResult<PathBuf> {
        let dir = flag.clone().or_else(|| self.run.output_dir.clone()).unwrap_or_else(|| PathBuf::from("."));
        std::fs::create_dir_all(&dir).map_err(|e| CliError::Config(format!("cannot create {}: {e}", dir.display())))?;
        Ok(dir)
    }
}

fn load_series(paths: &[PathBuf]) -> CliResult<(BTreeMap<String, TurbineSeries>, IngestStats)> {
    let mut all = BTreeMap::new();
    let mut stats = IngestStats::default();
    for p in paths {
        let got = ingest(p).map_err(|e| CliError::from(e).with_context(p))?;
        stats.rows_parsed += got.stats.rows_parsed;
        stats.slots_filled += got.stats.slots_filled;
        for (id, s) in got.series {
            if all.insert(id.clone(), s).is_some() {
                return Err(CliError::Data(format!("turbine {id} appears in more than one input file")));
            }
        }
    }
    log::info!("ingested {} turbines, {} rows", all.len(), stats.rows_parsed);
    Ok((all, stats))
}

fn pick<'a>(series: &'a BTreeMap<String, TurbineSeries>, id: Option<&str>, path: &Path) -> CliResult<&'a TurbineSeries> {
    match id {
        Some(id) => series.get(id).ok_or_else(|| CliError::Data(format!("turbine {id} not found in {}", path.display()))),
        None if series.len() == 1 => Ok(series.values().next().expect("one series")),
        None => Err(CliError::Config(format!(
            "{} holds {} turbines; choose one with an id flag",
            path.display(),
            series.len()
        ))),
    }
}

impl CliError {
    fn with_context(self, p: &Path) -> Self {
        let add = |m: String| format!("{}: {m}", p.display());
        match self {
            CliError::Config(m) => CliError::Config(add(m)),
            CliError::Data(m) => CliError::Data(add(m)),
            CliError::Numerical(m) => CliError::Numerical(add(m)),
        }
    }
}

fn file_stem(id: &str) -> String {
    id.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' { c } else { '_' }).collect()
}

fn write_report<T: Serialize, A: Serialize>(
    path: &Path,
    kind: &str,
    ctx: &Context,
    args: &A,
    seed: Option<u64>,
    body: T,
) -> CliResult<()> {
    let effective = json!({ "command": kind, "run": ctx.run, "args": args });
    Report::new(kind, &effective, seed, body)?.write(path)?;
    Ok(())
}

fn histogram_rows(h: &Histogram) -> Vec<Vec<Option<f64>>> {
    h.bin_edges
        .windows(2)
        .zip(h.counts.iter().zip(&h.density))
        .map(|(e, (&c, &d))| vec![Some(e[0]), Some(e[1]), Some(c as f64), Some(d)])
        .collect()
}

// ------------------------------------------------------------------ cleanse

#[derive(Debug, Args, Serialize)]
pub struct CleanseArgs {
    /// Input CSV files in the ingestion schema.
    #[arg(long, short)]
    input: Vec<PathBuf>,
    #[arg(long, short)]
    out_dir: Option<PathBuf>,
    /// Ramp threshold on |ΔP| / rated power.
    #[arg(long)]
    xi0: Option<f64>,
    /// Range-overlap factor for the ramp rule.
    #[arg(long)]
    q: Option<f64>,
    #[arg(long)]
    rated_power: Option<f64>,
    /// Decimal places compared by the identical-value rule.
    #[arg(long)]
    precision_digits: Option<u32>,
}

pub fn cleanse(ctx: &Context, a: CleanseArgs) -> CliResult<()> {
    let mut cfg = ctx.run.cleansing;
    if let Some(v) = a.xi0 {
        cfg.xi0 = v;
    }
    if let Some(v) = a.q {
        cfg.q = v;
    }
    if let Some(v) = a.rated_power {
        cfg.rated_power = v;
    }
    if let Some(v) = a.precision_digits {
        cfg.precision_digits = v;
    }
    cfg.validate()?;
    let (series, stats) = load_series(&ctx.inputs(&a.input)?)?;
    let out = ctx.out_dir(&a.out_dir)?;
    let results: Vec<(TurbineSeries, CleansingReport)> =
        series.par_iter().map(|(_, s)| run_cleanse(s, &cfg)).collect::<windscale::Result<_>>()?;
    export(&out.join("cleaned.csv"), results.iter().map(|(s, _)| s))?;
    let reports: Vec<&CleansingReport> = results.iter().map(|(_, r)| r).collect();
    for r in &reports {
        log::info!("{}: NA {:.4} -> {:.4}", r.turbine_id, r.na_fraction_before, r.na_fraction_after);
    }
    write_report(
        &out.join("cleansing_report.json"),
        "cleansing",
        ctx,
        &a,
        None,
        json!({ "config": cfg, "ingest": stats, "turbines": reports }),
    )
}

// ------------------------------------------------------------------ analyze

#[derive(Debug, Args, Serialize)]
pub struct AnalyzeArgs {
    #[arg(long, short)]
    input: Vec<PathBuf>,
    #[arg(long, short)]
    out_dir: Option<PathBuf>,
    /// Maximum ACF lag in 10-minute steps.
    #[arg(long)]
    max_lag: Option<usize>,
    #[arg(long)]
    n_bins: Option<usize>,
    #[arg(long)]
    n_segments: Option<usize>,
    #[arg(long)]
    n_shuffles: Option<usize>,
    /// Lower edge of the spectrum fit range (Hz).
    #[arg(long, requires = "fit_hi")]
    fit_lo: Option<f64>,
    /// Upper edge of the spectrum fit range (Hz).
    #[arg(long, requires = "fit_lo")]
    fit_hi: Option<f64>,
}

#[derive(Debug, Serialize)]
struct AnalysisSummary {
    turbine_id: String,
    n_slots: usize,
    na_fraction: f64,
    peak_mass: f64,
    /// Density maxima (kW) with prominence of at least 5% of the tallest bin.
    modes: Vec<f64>,
    acf_band_halfwidth: Option<f64>,
    /// First lag (steps) where the ACF falls inside the band.
    acf_decorrelation_lag: Option<usize>,
    beta: f64,
    beta_stderr: f64,
    fit_range: (f64, f64),
    increment_moments: Moments,
}

pub fn analyze(ctx: &Context, a: AnalyzeArgs) -> CliResult<()> {
    let seed = ctx.seed()?;
    let mut o = ctx.run.analysis.clone();
    o.max_lag = a.max_lag.unwrap_or(o.max_lag);
    o.n_bins = a.n_bins.unwrap_or(o.n_bins);
    o.n_segments = a.n_segments.unwrap_or(o.n_segments);
    o.n_shuffles = a.n_shuffles.unwrap_or(o.n_shuffles);
    if let (Some(lo), Some(hi)) = (a.fit_lo, a.fit_hi) {
        o.fit_range = Some((lo, hi));
    }
    let (series, _) = load_series(&ctx.inputs(&a.input)?)?;
    let out = ctx.out_dir(&a.out_dir)?;
    let summaries: Vec<AnalysisSummary> = series
        .par_iter()
        .map(|(id, s)| -> CliResult<AnalysisSummary> {
            let v = s.power_avg();
            let stem = out.join(file_stem(id));
            let hist = pdf_histogram(v, o.n_bins)?;
            write_table(&stem.with_extension("pdf.csv"), &["bin_lo_kw", "bin_hi_kw", "count", "density"], histogram_rows(&hist))?;

            let max_lag = o.max_lag.min(s.len().saturating_sub(2));
            let acf = acf_with_band(v, max_lag, o.n_shuffles, seed)?;
            let band = acf.band_halfwidth;
            write_table(
                &stem.with_extension("acf.csv"),
                &["lag_steps", "lag_seconds", "theta"],
                acf.lags.iter().zip(&acf.theta).map(|(&l, &t)| vec![Some(l as f64), Some((l as i64 * STEP_SECONDS) as f64), t]),
            )?;

            let seg_len = s.len() / o.n_segments.max(1);
            let fit_range = o.fit_range.unwrap_or((
                1.0 / (seg_len.max(1) as f64 * STEP_SECONDS as f64),
                1.0 / (2.0 * STEP_SECONDS as f64),
            ));
            let spec = spectrum(v, o.n_segments, fit_range)?;
            write_table(
                &stem.with_extension("spectrum.csv"),
                &["frequency_hz", "power"],
                spec.frequencies.iter().zip(&spec.power).map(|(&f, &p)| vec![Some(f), Some(p)]),
            )?;

            let inc = standardize(&increments(s, STEP_SECONDS)?)?;
            let z = &inc.standardized.as_ref().expect("standardized").values;
            let inc_hist = pdf_histogram(z, o.n_bins)?;
            write_table(&stem.with_extension("increments_pdf.csv"), &["bin_lo", "bin_hi", "count", "density"], histogram_rows(&inc_hist))?;

            let centers = hist.bin_centers();
            Ok(AnalysisSummary {
                turbine_id: id.clone(),
                n_slots: s.len(),
                na_fraction: s.na_fraction(),
                peak_mass: window_mass(v, &PEAK_WINDOWS),
                modes: hist.modes(0.05).into_iter().map(|i| centers[i]).collect(),
                acf_band_halfwidth: band,
                acf_decorrelation_lag: band.and_then(|b| {
                    acf.lags.iter().zip(&acf.theta).skip(1).find(|(_, t)| t.is_some_and(|t| t.abs() < b)).map(|(&l, _)| l)
                }),
                beta: spec.beta,
                beta_stderr: spec.beta_stderr,
                fit_range,
                increment_moments: increment_moments(&inc)?,
            })
        })
        .collect::<CliResult<_>>()?;
    write_report(&out.join("analysis.json"), "analysis", ctx, &a, Some(seed), json!({ "options": o, "turbines": summaries }))
}

// ------------------------------------------------------------------ dfa

#[derive(Debug, Args, Serialize)]
pub struct DfaArgs {
    #[arg(long, short)]
    input: Vec<PathBuf>,
    #[arg(long, short)]
    out_dir: Option<PathBuf>,
    /// Detrending polynomial order.
    #[arg(long)]
    order: Option<usize>,
    /// Comma-separated window sizes in steps.
    #[arg(long, value_delimiter = ',')]
    scales: Option<Vec<usize>>,
    /// Fit a single exponent over [fit_lo, fit_hi] (steps) instead of searching for a crossover.
    #[arg(long, requires = "fit_hi")]
    fit_lo: Option<usize>,
    #[arg(long, requires = "fit_lo")]
    fit_hi: Option<usize>,
    /// Skip crossover detection.
    #[arg(long)]
    no_crossover: bool,
}

#[derive(Debug, Serialize)]
struct DfaSummary {
    turbine_id: String,
    fit: ScalingFit,
    dropped_scales: Vec<usize>,
}

pub fn dfa(ctx: &Context, a: DfaArgs) -> CliResult<()> {
    let mut o = ctx.run.dfa.clone();
    o.order = a.order.unwrap_or(o.order);
    if a.scales.is_some() {
        o.scales = a.scales.clone();
    }
    if let (Some(lo), Some(hi)) = (a.fit_lo, a.fit_hi) {
        o.fit_range = Some((lo, hi));
    }
    o.detect_crossover &= !a.no_crossover;
    let (series, _) = load_series(&ctx.inputs(&a.input)?)?;
    let out = ctx.out_dir(&a.out_dir)?;
    let fits: Vec<DfaSummary> = series
        .par_iter()
        .map(|(id, s)| -> CliResult<DfaSummary> {
            let scales = o.scales.clone().unwrap_or_else(|| default_scales(s.len()));
            let curve = fluctuation(s.power_avg(), &scales, o.order)?;
            write_table(
                &out.join(file_stem(id)).with_extension("fluctuation.csv"),
                &["scale_steps", "scale_seconds", "fluctuation", "windows"],
                curve.scales.iter().zip(&curve.fluctuation).zip(&curve.segments_used).map(|((&sc, &f), &w)| {
                    vec![Some(sc as f64), Some((sc as i64 * STEP_SECONDS) as f64), Some(f), Some(w as f64)]
                }),
            )?;
            let fit = match (o.fit_range, o.detect_crossover) {
                (Some(r), _) => fit_alpha(&curve, r)?,
                (None, true) => match fit_crossover(&curve) {
                    Err(Error::InsufficientScales { needed, got }) => {
                        log::warn!("{id}: {got} scales, crossover search needs {needed}; fitting one exponent");
                        fit_alpha_all(&curve)?
                    }
                    other => other?,
                },
                (None, false) => fit_alpha_all(&curve)?,
            };
            Ok(DfaSummary { turbine_id: id.clone(), fit, dropped_scales: curve.dropped_scales })
        })
        .collect::<CliResult<_>>()?;
    write_report(&out.join("dfa.json"), "dfa", ctx, &a, None, json!({ "options": o, "turbines": fits }))
}

// ------------------------------------------------------------------ simulate

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseMethod {
    Circulant,
    DurbinLevinson,
}

impl From<NoiseMethod> for Method {
    fn from(m: NoiseMethod) -> Self {
        match m {
            NoiseMethod::Circulant => Method::Circulant,
            NoiseMethod::DurbinLevinson => Method::DurbinLevinson,
        }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct SimulateArgs {
    /// Use the preset parameters for this Hurst exponent (0.5, 0.7 or 0.9).
    #[arg(long, conflicts_with = "params")]
    hurst: Option<f64>,
    /// Model parameters: a bare parameter JSON or a calibration profile.
    #[arg(long)]
    params: Option<PathBuf>,
    /// Number of 10-minute steps.
    #[arg(long, conflicts_with = "months")]
    steps: Option<usize>,
    /// Number of 30-day months (4320 steps each).
    #[arg(long)]
    months: Option<usize>,
    /// Output CSV; a provenance JSON is written next to it.
    #[arg(long, short)]
    output: PathBuf,
    #[arg(long, default_value = "SIM")]
    turbine_id: String,
    /// Start timestamp (fixes the seasonal phase).
    #[arg(long)]
    start: Option<String>,
    #[arg(long, value_enum)]
    noise: Option<NoiseMethod>,
    /// Steps simulated and discarded before the output starts.
    #[arg(long)]
    burn_in: Option<usize>,
}

fn read_params(path: &Path) -> CliResult<ModelParams> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let v: serde_json::Value = serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let inner = v.get("body").and_then(|b| b.get("model")).cloned().unwrap_or(v);
    serde_json::from_value(inner).map_err(|e| CliError::Config(format!("{}: not a parameter set: {e}", path.display())))
}

fn sidecar(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

#[derive(Debug, Serialize)]
struct SimulationMeta {
    params: ModelParams,
    n_steps: usize,
    transitions: TransitionStats,
}

pub fn simulate(ctx: &Context, a: SimulateArgs) -> CliResult<()> {
    let seed = ctx.seed()?;
    let mut p = if let Some(path) = &a.params {
        read_params(path)?
    } else if let Some(h) = a.hurst {
        ModelParams::table1(h)?
    } else if let Some(m) = &ctx.run.model {
        m.clone()
    } else if let Some(path) = &ctx.run.calibration_profile {
        read_params(path)?
    } else {
        return Err(CliError::Config("no model parameters; pass --hurst or --params, or set \"model\" in the config".into()));
    };
    p.seed = seed;
    if let Some(s) = &a.start {
        p.t_start = parse_timestamp(s).ok_or_else(|| CliError::Config(format!("bad --start timestamp {s:?}")))?;
    }
    if let Some(m) = a.noise {
        p.noise_method = m.into();
    }
    if let Some(b) = a.burn_in {
        p.burn_in = b;
    }
    let n = match (a.steps, a.months) {
        (Some(n), _) => n,
        (None, Some(m)) => m * 4320,
        (None, None) => 4320,
    };
    let sim = run_simulation(&p, n)?;
    export(&a.output, [&sim.to_turbine_series(&a.turbine_id)])?;
    let meta = SimulationMeta { transitions: sim.transition_stats(), params: p, n_steps: n };
    write_report(&sidecar(&a.output), "simulation", ctx, &a, Some(seed), meta)
}

// ------------------------------------------------------------------ calibrate

#[derive(Debug, Args, Serialize)]
pub struct CalibrateArgs {
    #[arg(long, short)]
    input: Vec<PathBuf>,
    /// Turbine to calibrate when the input holds several.
    #[arg(long)]
    turbine: Option<String>,
    #[arg(long, default_value_t = 0.9)]
    hurst: f64,
    /// Output profile JSON (usable as `simulate --params`).
    #[arg(long, short)]
    output: PathBuf,
    /// Simulated replicas per candidate value.
    #[arg(long)]
    replicas: Option<usize>,
    /// Also optimize a, D, A separately for every month.
    #[arg(long)]
    per_month: bool,
    /// Split into calendar months instead of 30-day blocks.
    #[arg(long)]
    calendar_months: bool,
    /// Cut-in wind speed (m/s).
    #[arg(long)]
    cut_in: Option<f64>,
    /// Cut-off wind speed (m/s).
    #[arg(long)]
    cut_off: Option<f64>,
}

#[derive(Debug, Serialize)]
struct CalibrationProfile {
    turbine_id: String,
    model: ModelParams,
    result: CalibrationResult,
}

pub fn calibrate(ctx: &Context, a: CalibrateArgs) -> CliResult<()> {
    let seed = ctx.seed()?;
    let inputs = ctx.inputs(&a.input)?;
    let (series, _) = load_series(&inputs)?;
    let s = pick(&series, a.turbine.as_deref(), &inputs[0])?;
    let d = CalibrationConfig::default();
    let cfg = CalibrationConfig {
        hurst: a.hurst,
        replicas: a.replicas.unwrap_or(d.replicas),
        mode: if a.per_month { CalibrationMode::PerMonth } else { CalibrationMode::Pooled },
        calendar_months: a.calendar_months,
        cut_in: a.cut_in.unwrap_or(d.cut_in),
        cut_off: a.cut_off.unwrap_or(d.cut_off),
        seed,
        ..d
    };
    let result = run_calibration(s, &cfg)?;
    if result.fixed.excess_from_config {
        log::warn!("no wind-speed channel; excess probabilities taken from defaults");
    }
    if !result.fixed.omega.dominant {
        log::warn!("no dominant seasonal frequency (peak/median {:.1})", result.fixed.omega.peak_to_median);
    }
    let model = result.to_model_params(s.t0(), seed, cfg.p_minus, cfg.p_plus);
    let profile = CalibrationProfile { turbine_id: s.turbine_id().to_string(), model, result };
    write_report(&a.output, "calibration", ctx, &a, Some(seed), json!({ "config": cfg, "model": profile.model, "turbine_id": profile.turbine_id, "result": profile.result }))
}

// ------------------------------------------------------------------ compare

#[derive(Debug, Args, Serialize)]
pub struct CompareArgs {
    /// Measured series CSV.
    #[arg(long)]
    real: PathBuf,
    /// Simulated series CSV.
    #[arg(long)]
    sim: PathBuf,
    #[arg(long)]
    real_id: Option<String>,
    #[arg(long)]
    sim_id: Option<String>,
    #[arg(long, short)]
    output: PathBuf,
    #[arg(long)]
    n_quantiles: Option<usize>,
    #[arg(long)]
    max_lag: Option<usize>,
    #[arg(long)]
    n_bins: Option<usize>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ComparisonBody {
    real_id: String,
    sim_id: String,
    options: ComparisonOptions,
    metrics: SeriesComparison,
}

pub fn compare(ctx: &Context, a: CompareArgs) -> CliResult<()> {
    let paths = ctx.inputs(&[a.real.clone(), a.sim.clone()])?;
    let (real, _) = load_series(&paths[..1])?;
    let (sim, _) = load_series(&paths[1..])?;
    let r = pick(&real, a.real_id.as_deref(), &a.real)?;
    let s = pick(&sim, a.sim_id.as_deref(), &a.sim)?;
    let d = ComparisonOptions::default();
    let opts = ComparisonOptions {
        n_quantiles: a.n_quantiles.unwrap_or(d.n_quantiles),
        max_lag: a.max_lag.unwrap_or(ctx.run.analysis.max_lag),
        n_bins: a.n_bins.unwrap_or(ctx.run.analysis.n_bins),
        ..d
    };
    let metrics = compare_series(r.power_avg(), s.power_avg(), &opts)?;
    let body = ComparisonBody { real_id: r.turbine_id().into(), sim_id: s.turbine_id().into(), options: opts, metrics };
    write_report(&a.output, "comparison", ctx, &a, ctx.run.seed, body)
}

// ------------------------------------------------------------------ fgn

#[derive(Debug, Args, Serialize)]
pub struct FgnArgs {
    #[arg(long)]
    hurst: f64,
    /// Number of samples.
    #[arg(long, short)]
    n: usize,
    #[arg(long, value_enum, default_value = "circulant")]
    method: NoiseMethod,
    /// Cumulate the noise into a fractional Brownian path.
    #[arg(long)]
    cumulate: bool,
    #[arg(long, short)]
    output: PathBuf,
    #[arg(long, default_value = "FGN")]
    turbine_id: String,
    #[arg(long, default_value = "2014-03-01T00:00:00Z")]
    start: String,
}

pub fn fgn(ctx: &Context, a: FgnArgs) -> CliResult<()> {
    let seed = ctx.seed()?;
    let t0 = parse_timestamp(&a.start).ok_or_else(|| CliError::Config(format!("bad --start timestamp {:?}", a.start)))?;
    let mut x = fgn::sample(&FgnSpec::new(a.hurst, a.n, seed, a.method.into())?)?;
    if a.cumulate {
        let mut acc = 0.0;
        x.iter_mut().for_each(|v| {
            acc += *v;
            *v = acc;
        });
    }
    let s = TurbineSeries::from_power(a.turbine_id.clone(), t0, x.into_iter().map(Some).collect());
    export(&a.output, [&s])?;
    write_report(&sidecar(&a.output), "fgn", ctx, &a, Some(seed), json!({ "hurst": a.hurst, "n": a.n }))
}
