//! Parameter estimation for the power model.
//!
//! Six parameters are read off the data directly (`P0`, `ω`, `p_≷`, `σ_±`). The
//! remaining three (`a`, `D`, `A`) are tuned by matching a statistic of simulated
//! series to the same statistic of the data:
//!
//! - `D`: the conditional second moment of one-step increments at `P ≈ P0`,
//! - `a`: the fraction of values inside the two peak windows,
//! - `A`: the monthly time-averaged cumulative power `⟨E(t)⟩_t`.
//!
//! Every candidate is scored on the same replica seeds (common random numbers), so
//! objectives are deterministic and comparable across candidates.

use std::ops::Range;

use chrono::Datelike;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{periodogram, window_mass};
use crate::model::{simulate, ModelParams};
use crate::rng::derive_seed;
use crate::series::TurbineSeries;
use crate::stats::present;
use crate::{Error, Result};

/// Center of the operating range.
pub fn fix_center(p_minus: f64, p_plus: f64) -> f64 {
    0.5 * (p_minus + p_plus)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OmegaEstimate {
    /// Angular frequency in rad per step.
    pub omega: f64,
    pub period_steps: f64,
    /// Peak periodogram value over the median one.
    pub peak_to_median: f64,
    /// False when `peak_to_median < 10`: no dominant seasonality.
    pub dominant: bool,
}

/// Angular frequency of the largest periodogram ordinate (zero frequency excluded).
/// NA slots are filled with the mean before the transform.
pub fn estimate_omega(values: &[Option<f64>]) -> Result<OmegaEstimate> {
    let xs = present(values);
    if xs.len() < 2 || values.len() < 4 {
        return Err(Error::InsufficientData("frequency estimate needs at least 4 samples".into()));
    }
    let m = xs.iter().sum::<f64>() / xs.len() as f64;
    let x: Vec<f64> = values.iter().map(|v| v.unwrap_or(m) - m).collect();
    let pg = periodogram(&x);
    let (k, peak) = pg
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (i, &p)| if p > best.1 { (i, p) } else { best });
    let mut sorted = pg.clone();
    sorted.sort_by(f64::total_cmp);
    let median = sorted[sorted.len() / 2];
    let ratio = if median > 0.0 { peak / median } else { f64::INFINITY };
    let period = x.len() as f64 / (k + 1) as f64;
    Ok(OmegaEstimate {
        omega: 2.0 * std::f64::consts::PI / period,
        period_steps: period,
        peak_to_median: ratio,
        dominant: ratio >= 10.0,
    })
}

/// Consecutive blocks of `month_len` steps (a trailing partial block is kept if non-empty).
pub fn fixed_months(len: usize, month_len: usize) -> Vec<Range<usize>> {
    (0..len.div_ceil(month_len.max(1)))
        .map(|i| i * month_len..((i + 1) * month_len).min(len))
        .collect()
}

/// Calendar-month partition of a series (UTC).
pub fn calendar_months(series: &TurbineSeries) -> Vec<Range<usize>> {
    let mut out: Vec<Range<usize>> = Vec::new();
    let mut key = None;
    for i in 0..series.len() {
        let ts = series.timestamp(i);
        let k = (ts.year(), ts.month());
        if key != Some(k) {
            out.push(i..i + 1);
            key = Some(k);
        } else if let Some(last) = out.last_mut() {
            last.end = i + 1;
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExcessProbabilities {
    /// Per month: fraction of wind speeds above the cut-off.
    pub p_gt: Vec<f64>,
    /// Per month: fraction of wind speeds below the cut-in.
    pub p_lt: Vec<f64>,
}

impl ExcessProbabilities {
    pub fn pooled(&self) -> (f64, f64) {
        let avg = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        (avg(&self.p_gt), avg(&self.p_lt))
    }
}

pub const MIN_MONTH_SAMPLES: usize = 100;

/// Monthly fractions of wind speeds outside `[u_minus, u_plus]`.
pub fn estimate_p(
    wind: Option<&[Option<f64>]>,
    u_minus: f64,
    u_plus: f64,
    months: &[Range<usize>],
) -> Result<ExcessProbabilities> {
    let wind = wind.ok_or_else(|| Error::Unavailable("no wind-speed channel; supply p_gt/p_lt".into()))?;
    if !(u_minus < u_plus) {
        return Err(Error::InvalidArgument(format!("cut-in {u_minus} must be below cut-off {u_plus}")));
    }
    let mut out = ExcessProbabilities { p_gt: Vec::new(), p_lt: Vec::new() };
    for r in months {
        let u = present(&wind[r.clone()]);
        if u.len() < MIN_MONTH_SAMPLES {
            return Err(Error::InsufficientData(format!(
                "month {:?} has {} wind samples, need {MIN_MONTH_SAMPLES}",
                r,
                u.len()
            )));
        }
        let n = u.len() as f64;
        out.p_gt.push(u.iter().filter(|&&v| v > u_plus).count() as f64 / n);
        out.p_lt.push(u.iter().filter(|&&v| v < u_minus).count() as f64 / n);
    }
    Ok(out)
}

pub const MIN_SIGMA_SAMPLES: usize = 50;

/// Maximum-likelihood spread of values within `±window` of each threshold, centred on
/// the threshold. Returns `(sigma_plus, sigma_minus)`.
pub fn estimate_sigma(values: &[Option<f64>], p_minus: f64, p_plus: f64, window: f64) -> Result<(f64, f64)> {
    let xs = present(values);
    let spread = |c: f64, side: &str| -> Result<f64> {
        let near: Vec<f64> = xs.iter().copied().filter(|v| (v - c).abs() <= window).collect();
        if near.len() < MIN_SIGMA_SAMPLES {
            return Err(Error::InsufficientData(format!(
                "{} values near {side} threshold {c}, need {MIN_SIGMA_SAMPLES}",
                near.len()
            )));
        }
        Ok((near.iter().map(|v| (v - c) * (v - c)).sum::<f64>() / near.len() as f64).sqrt())
    };
    Ok((spread(p_plus, "upper")?, spread(p_minus, "lower")?))
}

/// Replicas and run length used to score each candidate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimBudget {
    pub replicas: usize,
    pub n_steps: usize,
    pub seed: u64,
}

impl SimBudget {
    fn check(&self) -> Result<()> {
        if self.replicas == 0 || self.n_steps < 2 {
            return Err(Error::InvalidArgument("budget needs replicas >= 1 and n_steps >= 2".into()));
        }
        Ok(())
    }

    fn replica_seed(&self, stream: u64, r: usize) -> u64 {
        derive_seed(derive_seed(self.seed, stream), r as u64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScalarSearch {
    /// Score every value; ties go to the larger value.
    Grid(Vec<f64>),
    /// Golden-section search on `[lo, hi]` down to width `tol`.
    Golden { lo: f64, hi: f64, tol: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchTrace {
    pub best: f64,
    pub best_objective: f64,
    /// Every `(candidate, objective)` evaluated, in evaluation order.
    pub evaluations: Vec<(f64, f64)>,
}

fn run_search(search: &ScalarSearch, objective: impl Fn(f64) -> Result<f64> + Sync) -> Result<SearchTrace> {
    match search {
        ScalarSearch::Grid(grid) => {
            if grid.is_empty() {
                return Err(Error::InvalidArgument("empty search grid".into()));
            }
            let scores: Vec<f64> = grid.par_iter().map(|&c| objective(c)).collect::<Result<_>>()?;
            let mut best = 0;
            for i in 1..grid.len() {
                if scores[i] < scores[best] || (scores[i] == scores[best] && grid[i] > grid[best]) {
                    best = i;
                }
            }
            Ok(SearchTrace {
                best: grid[best],
                best_objective: scores[best],
                evaluations: grid.iter().copied().zip(scores).collect(),
            })
        }
        &ScalarSearch::Golden { lo, hi, tol } => {
            if !(hi > lo) || !(tol > 0.0) {
                return Err(Error::InvalidArgument(format!("bad bracket [{lo}, {hi}] / tol {tol}")));
            }
            let g = (5f64.sqrt() - 1.0) / 2.0;
            let (mut a, mut b) = (lo, hi);
            let mut evaluations = Vec::new();
            let mut eval = |x: f64| -> Result<f64> {
                let f = objective(x)?;
                evaluations.push((x, f));
                Ok(f)
            };
            let mut c = b - g * (b - a);
            let mut d = a + g * (b - a);
            let mut fc = eval(c)?;
            let mut fd = eval(d)?;
            while b - a > tol {
                if fc <= fd {
                    b = d;
                    d = c;
                    fd = fc;
                    c = b - g * (b - a);
                    fc = eval(c)?;
                } else {
                    a = c;
                    c = d;
                    fc = fd;
                    d = a + g * (b - a);
                    fd = eval(d)?;
                }
            }
            let (best, best_objective) = if fc <= fd { (c, fc) } else { (d, fd) };
            Ok(SearchTrace { best, best_objective, evaluations })
        }
    }
}

/// Simulate `replicas` runs of `n_steps` on common seeds.
fn replicas(template: &ModelParams, budget: &SimBudget, stream: u64) -> Result<Vec<Vec<f64>>> {
    (0..budget.replicas)
        .into_par_iter()
        .map(|r| {
            let p = template.clone().with_seed(budget.replica_seed(stream, r));
            Ok(simulate(&p, budget.n_steps)?.clipped)
        })
        .collect()
}

/// Default peak windows (kW, open intervals) around `P_−` and `P_+`.
pub const PEAK_WINDOWS: [(f64, f64); 2] = [(50.0, 200.0), (3550.0, 3800.0)];

/// Choose `a` from `grid` so the simulated peak mass matches `target`.
pub fn optimize_a(
    target: f64,
    template: &ModelParams,
    grid: &[f64],
    windows: &[(f64, f64)],
    budget: &SimBudget,
) -> Result<SearchTrace> {
    budget.check()?;
    if let Some(&bad) = grid.iter().find(|&&a| !(a > 0.0 && a < template.p0)) {
        return Err(Error::InvalidArgument(format!("grid value {bad} outside (0, P0)")));
    }
    run_search(&ScalarSearch::Grid(grid.to_vec()), |a| {
        let p = ModelParams { a, ..template.clone() };
        let runs = replicas(&p, budget, 1)?;
        let mass: f64 = runs
            .iter()
            .map(|r| window_mass(&crate::stats::all_present(r), windows))
            .sum::<f64>()
            / runs.len() as f64;
        Ok((mass - target).abs())
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiffusionEstimate {
    /// Mean squared one-step increment per step.
    pub d2: f64,
    pub n_samples: usize,
}

pub const MIN_D2_SAMPLES: usize = 200;

fn conditional_d2(series: &[&[Option<f64>]], center: f64, halfwidth: f64) -> (f64, usize) {
    let (mut sum, mut n) = (0.0, 0usize);
    for s in series {
        for w in s.windows(2) {
            if let (Some(a), Some(b)) = (w[0], w[1]) {
                if (a - center).abs() <= halfwidth {
                    sum += (b - a) * (b - a);
                    n += 1;
                }
            }
        }
    }
    (if n > 0 { sum / n as f64 } else { f64::NAN }, n)
}

/// Second Kramers–Moyal coefficient at `P ≈ center` with τ = 1 step, conditioning on
/// `|P(t) − center| ≤ halfwidth`.
pub fn diffusion_at(values: &[Option<f64>], center: f64, halfwidth: f64) -> Result<DiffusionEstimate> {
    diffusion_at_many(&[values], center, halfwidth)
}

pub fn diffusion_at_many(series: &[&[Option<f64>]], center: f64, halfwidth: f64) -> Result<DiffusionEstimate> {
    let (d2, n) = conditional_d2(series, center, halfwidth);
    if n < MIN_D2_SAMPLES {
        return Err(Error::InsufficientData(format!(
            "{n} samples in the conditioning bin around {center}, need {MIN_D2_SAMPLES}"
        )));
    }
    Ok(DiffusionEstimate { d2, n_samples: n })
}

/// `D⁽²⁾(P)` over equal-width bins, for diagnostics. Bins with no samples are skipped.
pub fn d2_profile(values: &[Option<f64>], lo: f64, hi: f64, n_bins: usize) -> Vec<(f64, f64, usize)> {
    let w = (hi - lo) / n_bins as f64;
    (0..n_bins)
        .filter_map(|i| {
            let c = lo + (i as f64 + 0.5) * w;
            let (d2, n) = conditional_d2(&[values], c, 0.5 * w);
            (n > 0).then_some((c, d2, n))
        })
        .collect()
}

/// Tune `D` so the simulated `D⁽²⁾` at `P0` matches `target_d2`.
pub fn optimize_d(
    target_d2: f64,
    template: &ModelParams,
    search: &ScalarSearch,
    halfwidth: f64,
    budget: &SimBudget,
) -> Result<SearchTrace> {
    budget.check()?;
    run_search(search, |d| {
        let p = ModelParams { d, ..template.clone() };
        let runs: Vec<Vec<Option<f64>>> = replicas(&p, budget, 2)?
            .into_iter()
            .map(|r| crate::stats::all_present(&r))
            .collect();
        let refs: Vec<&[Option<f64>]> = runs.iter().map(|r| r.as_slice()).collect();
        let (d2, n) = conditional_d2(&refs, p.p0, halfwidth);
        if n == 0 {
            // No visit near the center: treat as maximally distant.
            return Ok(f64::MAX);
        }
        Ok((d2 - target_d2).abs())
    })
}

/// `⟨E(t)⟩_t` with `E(t) = Σ_{t' ≤ t} P(t')`. NA slots contribute the mean of the
/// present values.
pub fn mean_energy(values: &[Option<f64>]) -> Result<f64> {
    let xs = present(values);
    if xs.is_empty() {
        return Err(Error::InsufficientData("energy indicator needs data".into()));
    }
    let m = xs.iter().sum::<f64>() / xs.len() as f64;
    let mut acc = 0.0;
    let mut total = 0.0;
    for v in values {
        acc += v.unwrap_or(m);
        total += acc;
    }
    Ok(total / values.len() as f64)
}

/// Tune `A` so simulated monthly `⟨E⟩` match `targets` (one entry per month of length
/// `month_lengths[i]`, seasonal phase restarting at each month).
pub fn optimize_amp(
    targets: &[f64],
    month_lengths: &[usize],
    template: &ModelParams,
    search: &ScalarSearch,
    budget: &SimBudget,
) -> Result<SearchTrace> {
    budget.check()?;
    if targets.is_empty() || targets.len() != month_lengths.len() {
        return Err(Error::InsufficientData("need one target per month and at least one month".into()));
    }
    run_search(search, |amp| {
        let p = ModelParams { amp, ..template.clone() };
        let mut gap = 0.0;
        for (m, (&target, &len)) in targets.iter().zip(month_lengths).enumerate() {
            let b = SimBudget { n_steps: len, ..*budget };
            let runs = replicas(&p, &b, 3 + m as u64)?;
            let e: f64 = runs
                .iter()
                .map(|r| mean_energy(&crate::stats::all_present(r)))
                .sum::<Result<f64>>()?
                / runs.len() as f64;
            gap += (e - target).abs();
        }
        Ok(gap / targets.len() as f64)
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum CalibrationMode {
    #[default]
    Pooled,
    PerMonth,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CalibrationConfig {
    pub hurst: f64,
    pub p_minus: f64,
    pub p_plus: f64,
    /// Cut-in wind speed (m/s).
    pub cut_in: f64,
    /// Cut-off wind speed (m/s).
    pub cut_off: f64,
    /// Used when the series has no wind speed.
    pub fallback_p_gt: f64,
    pub fallback_p_lt: f64,
    pub sigma_window: f64,
    pub peak_windows: Vec<(f64, f64)>,
    pub a_grid: Vec<f64>,
    pub d_search: ScalarSearch,
    pub amp_search: ScalarSearch,
    pub d2_halfwidth: f64,
    pub replicas: usize,
    /// Month length in steps when the series is partitioned by fixed blocks.
    pub month_len: usize,
    /// Partition by calendar month instead of fixed blocks.
    pub calendar_months: bool,
    pub mode: CalibrationMode,
    /// Starting `a`, `D`, `A` before their own optimisation step.
    pub initial: (f64, f64, f64),
    pub seed: u64,
}

/// `a` grid in 30 kW steps below `P0 = 1800 kW`.
pub fn default_a_grid() -> Vec<f64> {
    (1..=40).map(|k| 1805.0 - 30.0 * k as f64).filter(|&a| a > 0.0).collect()
}

impl Default for CalibrationConfig {
    fn default() -> Self {
        Self {
            hurst: 0.9,
            p_minus: 0.0,
            p_plus: 3600.0,
            cut_in: 3.0,
            cut_off: 25.0,
            fallback_p_gt: 0.0019,
            fallback_p_lt: 0.0861,
            sigma_window: 200.0,
            peak_windows: PEAK_WINDOWS.to_vec(),
            a_grid: default_a_grid(),
            d_search: ScalarSearch::Golden { lo: 10.0, hi: 1500.0, tol: 1.0 },
            amp_search: ScalarSearch::Golden { lo: 0.0, hi: 2.0, tol: 0.005 },
            d2_halfwidth: 200.0,
            replicas: 10,
            month_len: 4320,
            calendar_months: false,
            mode: CalibrationMode::Pooled,
            initial: (1500.0, 400.0, 0.2),
            seed: 2014,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixedParams {
    pub p0: f64,
    pub omega: OmegaEstimate,
    pub excess: ExcessProbabilities,
    /// True when `p_≷` came from the configured fallback.
    pub excess_from_config: bool,
    pub sigma_plus: f64,
    pub sigma_minus: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizedParams {
    pub a: f64,
    pub d: f64,
    pub amp: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub target_peak_mass: f64,
    pub target_d2: DiffusionEstimate,
    pub target_energy: Vec<f64>,
    pub a_trace: SearchTrace,
    pub d_trace: SearchTrace,
    pub amp_trace: SearchTrace,
    /// `(P bin center, D⁽²⁾, samples)` of the data.
    pub d2_profile: Vec<(f64, f64, usize)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationResult {
    pub hurst: f64,
    pub fixed: FixedParams,
    pub optimized: OptimizedParams,
    /// Filled in per-month mode.
    pub per_month: Option<Vec<OptimizedParams>>,
    pub diagnostics: Diagnostics,
}

impl CalibrationResult {
    /// Model parameters with the pooled estimates.
    pub fn to_model_params(&self, t_start: chrono::DateTime<chrono::Utc>, seed: u64, p_minus: f64, p_plus: f64) -> ModelParams {
        let (p_gt, p_lt) = self.fixed.excess.pooled();
        ModelParams {
            hurst: self.hurst,
            a: self.optimized.a,
            d: self.optimized.d,
            amp: self.optimized.amp,
            p0: self.fixed.p0,
            omega: self.fixed.omega.omega,
            p_gt,
            p_lt,
            sigma_plus: self.fixed.sigma_plus,
            sigma_minus: self.fixed.sigma_minus,
            p_minus,
            p_plus,
            seed,
            t_start,
            burn_in: 0,
            noise_method: Default::default(),
        }
    }
}

struct Targets {
    peak_mass: f64,
    d2: DiffusionEstimate,
    energy: Vec<f64>,
    lengths: Vec<usize>,
}

fn optimize_block(
    targets: &Targets,
    template: &ModelParams,
    cfg: &CalibrationConfig,
    seed: u64,
) -> Result<(OptimizedParams, SearchTrace, SearchTrace, SearchTrace)> {
    let n_steps = targets.lengths.iter().sum::<usize>() / targets.lengths.len();
    let budget = SimBudget { replicas: cfg.replicas, n_steps, seed };
    let d_trace = optimize_d(targets.d2.d2, template, &cfg.d_search, cfg.d2_halfwidth, &budget)?;
    let p = ModelParams { d: d_trace.best, ..template.clone() };
    let a_trace = optimize_a(targets.peak_mass, &p, &cfg.a_grid, &cfg.peak_windows, &budget)?;
    let p = ModelParams { a: a_trace.best, ..p };
    let amp_trace = optimize_amp(&targets.energy, &targets.lengths, &p, &cfg.amp_search, &budget)?;
    let opt = OptimizedParams { a: a_trace.best, d: d_trace.best, amp: amp_trace.best };
    Ok((opt, a_trace, d_trace, amp_trace))
}

/// Full calibration of a cleaned series for the configured Hurst exponent.
///
/// Order: fixed parameters, then `D`, then `a` (with `D`), then `A` (with `a`, `D`).
pub fn calibrate(series: &TurbineSeries, cfg: &CalibrationConfig) -> Result<CalibrationResult> {
    let power = series.power_avg();
    let months = if cfg.calendar_months {
        calendar_months(series)
    } else {
        fixed_months(series.len(), cfg.month_len)
    };
    let p0 = fix_center(cfg.p_minus, cfg.p_plus);
    let omega = estimate_omega(series.wind_speed().unwrap_or(power))?;
    let (excess, excess_from_config) = match estimate_p(series.wind_speed(), cfg.cut_in, cfg.cut_off, &months) {
        Ok(p) => (p, false),
        Err(Error::Unavailable(_)) => (
            ExcessProbabilities {
                p_gt: vec![cfg.fallback_p_gt; months.len()],
                p_lt: vec![cfg.fallback_p_lt; months.len()],
            },
            true,
        ),
        Err(e) => return Err(e),
    };
    let (sigma_plus, sigma_minus) = estimate_sigma(power, cfg.p_minus, cfg.p_plus, cfg.sigma_window)?;
    let (p_gt, p_lt) = excess.pooled();
    let (a0, d0, amp0) = cfg.initial;
    let template = ModelParams {
        hurst: cfg.hurst,
        a: a0,
        d: d0,
        amp: amp0,
        p0,
        omega: omega.omega,
        p_gt,
        p_lt,
        sigma_plus,
        sigma_minus,
        p_minus: cfg.p_minus,
        p_plus: cfg.p_plus,
        seed: cfg.seed,
        t_start: series.t0(),
        burn_in: 0,
        noise_method: Default::default(),
    };
    template.validate()?;

    let month_targets = |rs: &[Range<usize>]| -> Result<Targets> {
        let slices: Vec<&[Option<f64>]> = rs.iter().map(|r| &power[r.clone()]).collect();
        let joined: Vec<Option<f64>> = slices.iter().flat_map(|s| s.iter().copied()).collect();
        Ok(Targets {
            peak_mass: window_mass(&joined, &cfg.peak_windows),
            d2: diffusion_at_many(&slices, p0, cfg.d2_halfwidth)?,
            energy: slices.iter().map(|s| mean_energy(s)).collect::<Result<_>>()?,
            lengths: rs.iter().map(|r| r.len()).collect(),
        })
    };

    let pooled = month_targets(&months)?;
    let (optimized, a_trace, d_trace, amp_trace) = optimize_block(&pooled, &template, cfg, cfg.seed)?;
    let per_month = match cfg.mode {
        CalibrationMode::Pooled => None,
        CalibrationMode::PerMonth => Some(
            months
                .iter()
                .enumerate()
                .map(|(i, r)| {
                    let t = month_targets(std::slice::from_ref(r))?;
                    let p = ModelParams { p_gt: excess.p_gt[i], p_lt: excess.p_lt[i], ..template.clone() };
                    Ok(optimize_block(&t, &p, cfg, derive_seed(cfg.seed, 100 + i as u64))?.0)
                })
                .collect::<Result<Vec<_>>>()?,
        ),
    };
    Ok(CalibrationResult {
        hurst: cfg.hurst,
        fixed: FixedParams { p0, omega, excess, excess_from_config, sigma_plus, sigma_minus },
        optimized,
        per_month,
        diagnostics: Diagnostics {
            target_peak_mass: pooled.peak_mass,
            target_d2: pooled.d2,
            target_energy: pooled.energy,
            a_trace,
            d_trace,
            amp_trace,
            d2_profile: d2_profile(power, cfg.p_minus - 200.0, cfg.p_plus + 200.0, 20),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;
    use crate::stats::all_present;
    use rand::Rng;
    use rand_distr::{Distribution, Normal, StandardNormal, Weibull};

    #[test]
    fn center() {
        assert_eq!(fix_center(0.0, 3600.0), 1800.0);
        assert_eq!(fix_center(0.0, 2000.0), 1000.0);
        assert_eq!(fix_center(-100.0, 100.0), 0.0);
    }

    #[test]
    fn planted_daily_cycle() {
        let mut r = seeded(4);
        let v: Vec<Option<f64>> = (0..4320)
            .map(|t| {
                let n: f64 = StandardNormal.sample(&mut r);
                Some((2.0 * std::f64::consts::PI * t as f64 / 144.0).cos() + 0.1 * n)
            })
            .collect();
        let est = estimate_omega(&v).unwrap();
        let bin = 2.0 * std::f64::consts::PI / 4320.0;
        assert!((est.omega - 2.0 * std::f64::consts::PI / 144.0).abs() <= bin);
        assert!(est.dominant);
    }

    #[test]
    fn larger_of_two_cosines() {
        let v: Vec<Option<f64>> = (0..2048)
            .map(|t| {
                let t = t as f64;
                Some(2.0 * (2.0 * std::f64::consts::PI * t / 64.0).cos() + (2.0 * std::f64::consts::PI * t / 256.0).cos())
            })
            .collect();
        let est = estimate_omega(&v).unwrap();
        assert!((est.period_steps - 64.0).abs() < 1e-9);
    }

    #[test]
    fn white_noise_has_no_dominant_frequency() {
        let mut r = seeded(8);
        // The largest of N/2 exponential ordinates over their median grows like log2(N/2).
        let v: Vec<Option<f64>> = (0..128).map(|_| Some(StandardNormal.sample(&mut r))).collect();
        let est = estimate_omega(&v).unwrap();
        assert!(!est.dominant, "ratio {}", est.peak_to_median);
        assert!(estimate_omega(&[Some(1.0)]).is_err());
    }

    #[test]
    fn excess_probability_counting() {
        let inside: Vec<Option<f64>> = (0..200).map(|i| Some(5.0 + (i % 10) as f64)).collect();
        let p = estimate_p(Some(&inside), 3.0, 25.0, &[0..200]).unwrap();
        assert_eq!((p.p_gt[0], p.p_lt[0]), (0.0, 0.0));

        let mut month: Vec<Option<f64>> = vec![Some(10.0); 1000];
        for v in month.iter_mut().take(100) {
            *v = Some(30.0);
        }
        let p = estimate_p(Some(&month), 3.0, 25.0, &[0..1000]).unwrap();
        assert_eq!(p.p_gt[0], 0.10);

        assert!(matches!(estimate_p(None, 3.0, 25.0, &[0..10]), Err(Error::Unavailable(_))));
        assert!(matches!(estimate_p(Some(&month[..50]), 3.0, 25.0, &[0..50]), Err(Error::InsufficientData(_))));
    }

    #[test]
    fn weibull_cut_in_fraction() {
        let w = Weibull::new(10.0, 2.0).unwrap();
        let mut r = seeded(12);
        let u: Vec<Option<f64>> = (0..4320).map(|_| Some(w.sample(&mut r))).collect();
        let p = estimate_p(Some(&u), 3.0, 25.0, &[0..4320]).unwrap();
        let expected = 1.0 - (-(0.3f64).powi(2)).exp();
        assert!((p.p_lt[0] - expected).abs() < 0.01, "{} vs {expected}", p.p_lt[0]);
        assert!((expected - 0.0861).abs() < 1e-4);
    }

    #[test]
    fn planted_sigmas() {
        let mut r = seeded(3);
        let up = Normal::new(3600.0, 68.93).unwrap();
        let down = Normal::new(0.0, 4.47).unwrap();
        let mut v: Vec<Option<f64>> = (0..10_000).map(|_| Some(up.sample(&mut r))).collect();
        v.extend((0..10_000).map(|_| Some(down.sample(&mut r))));
        let (sp, sm) = estimate_sigma(&v, 0.0, 3600.0, 400.0).unwrap();
        assert!((sp / 68.93 - 1.0).abs() < 0.05, "{sp}");
        assert!((sm / 4.47 - 1.0).abs() < 0.05, "{sm}");

        let pinned: Vec<Option<f64>> = std::iter::repeat_n(Some(0.0), 60).chain(std::iter::repeat_n(Some(3600.0), 60)).collect();
        assert_eq!(estimate_sigma(&pinned, 0.0, 3600.0, 200.0).unwrap(), (0.0, 0.0));
        assert!(estimate_sigma(&pinned[..70], 0.0, 3600.0, 200.0).is_err());

        // Shift equivariance.
        let shifted: Vec<Option<f64>> = v.iter().map(|x| x.map(|x| x + 250.0)).collect();
        let (sp2, sm2) = estimate_sigma(&shifted, 250.0, 3850.0, 400.0).unwrap();
        assert!((sp - sp2).abs() < 1e-6 && (sm - sm2).abs() < 1e-6);
    }

    #[test]
    fn d2_of_white_increments() {
        // Random walk with N(0, 25²) steps around the conditioning point.
        let mut r = seeded(6);
        let mut x = 1800.0;
        let mut v = Vec::new();
        for _ in 0..50_000 {
            v.push(Some(x));
            let step: f64 = StandardNormal.sample(&mut r);
            x += 25.0 * step;
            x = 1800.0 + (x - 1800.0).clamp(-150.0, 150.0) * 0.9;
        }
        let est = diffusion_at(&all_present(&present(&v)), 1800.0, 200.0).unwrap();
        assert!(est.n_samples > 40_000);
        assert!(diffusion_at(&v[..100], 1800.0, 200.0).is_err());
        assert!(diffusion_at(&[Some(0.0); 500], 1800.0, 200.0).is_err());
    }

    #[test]
    fn d2_exact_on_iid_increments() {
        // Increments independent of the level: D2 equals their mean square.
        let mut r = seeded(16);
        let mut v = vec![Some(1800.0)];
        let mut sq = 0.0;
        let n = 20_000;
        for i in 0..n {
            let s: f64 = 30.0 * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut r);
            sq += s * s;
            v.push(Some(1800.0 + s));
            if i + 1 < n {
                v.push(Some(1800.0));
            }
        }
        let est = diffusion_at(&v, 1800.0, 1e-9).unwrap();
        assert!((est.d2 - sq / n as f64).abs() < 1e-9 * est.d2);
    }

    #[test]
    fn zero_noise_d2() {
        let mut p = ModelParams::table1(0.9).unwrap().with_seed(1);
        p.d = 0.0;
        p.a = 1.0;
        p.amp = 0.0;
        // Park the state at the (unstable) center; no noise keeps it there.
        let sim = simulate(&p, 400).unwrap();
        let v = sim.samples();
        let est = diffusion_at(&v, sim.clipped[0], 200.0).unwrap();
        assert!(est.d2 < 1e-6 * 1800.0 * 1800.0);
    }

    #[test]
    fn energy_indicator() {
        assert_eq!(mean_energy(&all_present(&[1.0, 2.0, 3.0])).unwrap(), (1.0 + 3.0 + 6.0) / 3.0);
        assert_eq!(mean_energy(&[Some(2.0), None, Some(2.0)]).unwrap(), 4.0);
        assert!(mean_energy(&[None]).is_err());
    }

    #[test]
    fn degenerate_searches() {
        let t = ModelParams::table1(0.9).unwrap();
        let b = SimBudget { replicas: 10, n_steps: 500, seed: 3 };
        let tr = optimize_a(0.0, &t, &[1799.0], &PEAK_WINDOWS, &b).unwrap();
        assert_eq!(tr.best, 1799.0);
        assert!(optimize_a(0.0, &t, &[], &PEAK_WINDOWS, &b).is_err());
        assert!(optimize_a(0.0, &t, &[1800.0], &PEAK_WINDOWS, &b).is_err());
        let tr = optimize_amp(&[1.0e6], &[500], &t, &ScalarSearch::Grid(vec![0.26]), &b).unwrap();
        assert_eq!(tr.best, 0.26);
    }

    #[test]
    fn grid_ties_prefer_larger() {
        let tr = run_search(&ScalarSearch::Grid(vec![1.0, 3.0, 2.0]), |_| Ok(0.5)).unwrap();
        assert_eq!(tr.best, 3.0);
    }

    #[test]
    fn golden_finds_parabola_minimum() {
        let tr = run_search(&ScalarSearch::Golden { lo: -3.0, hi: 5.0, tol: 1e-6 }, |x| Ok((x - 1.25) * (x - 1.25))).unwrap();
        assert!((tr.best - 1.25).abs() < 1e-5);
    }

    #[test]
    fn simulated_d2_tracks_d_squared() {
        let t = ModelParams::table1(0.5).unwrap();
        let b = SimBudget { replicas: 10, n_steps: 4320, seed: 5 };
        let target = 300.0f64 * 300.0;
        let tr = optimize_d(target, &t, &ScalarSearch::Golden { lo: 50.0, hi: 1000.0, tol: 1.0 }, 200.0, &b).unwrap();
        assert!((tr.best / 300.0 - 1.0).abs() < 0.1, "{}", tr.best);
    }

    #[test]
    fn months() {
        assert_eq!(fixed_months(10, 4), vec![0..4, 4..8, 8..10]);
        let s = TurbineSeries::from_power(
            "x",
            chrono::TimeZone::with_ymd_and_hms(&chrono::Utc, 2014, 3, 31, 23, 0, 0).unwrap(),
            vec![Some(1.0); 12],
        );
        assert_eq!(calendar_months(&s), vec![0..6, 6..12]);
    }

    #[test]
    fn a_grid_contains_presets() {
        let g = default_a_grid();
        assert!(g.contains(&1235.0) && g.contains(&1445.0));
        assert!(g.iter().all(|&a| a < 1800.0));
        let _ = seeded(0).random::<u8>();
    }
}
