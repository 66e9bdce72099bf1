//! Detrended fluctuation analysis.
//!
//! The profile (cumulative sum of the mean-adjusted series) is cut into `⌊T/s⌋` windows
//! from the start and the same number from the end. Each window is detrended with a
//! least-squares polynomial of order `m`; `F(s)` is the root mean square of the
//! per-window RMS residuals. Windows touching an NA slot are dropped.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::stats::{linear_fit, present};
use crate::{Error, Result};

/// Profile of a series. NA slots add nothing to the running sum and are flagged.
#[derive(Debug, Clone, PartialEq)]
pub struct Profile {
    pub values: Vec<f64>,
    pub na: Vec<bool>,
}

pub fn profile(series: &[Option<f64>]) -> Result<Profile> {
    let xs = present(series);
    if xs.len() < 2 {
        return Err(Error::InsufficientData("profile needs 2 non-NA values".into()));
    }
    let mean = xs.iter().sum::<f64>() / xs.len() as f64;
    let mut acc = 0.0;
    let mut values = Vec::with_capacity(series.len());
    let mut na = Vec::with_capacity(series.len());
    for v in series {
        if let Some(v) = v {
            acc += v - mean;
        }
        values.push(acc);
        na.push(v.is_none());
    }
    Ok(Profile { values, na })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FluctuationCurve {
    /// Window sizes in 10-minute samples.
    pub scales: Vec<usize>,
    pub fluctuation: Vec<f64>,
    pub detrend_order: usize,
    pub segments_used: Vec<usize>,
    /// Requested scales that had no usable window.
    pub dropped_scales: Vec<usize>,
}

/// `n` log-spaced integer scales from `lo` to `hi`, deduplicated.
pub fn log_scales(lo: usize, hi: usize, n: usize) -> Vec<usize> {
    if n < 2 || hi <= lo {
        return vec![lo];
    }
    let (a, b) = ((lo as f64).ln(), (hi as f64).ln());
    let mut s: Vec<usize> = (0..n)
        .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp().round() as usize)
        .collect();
    s.dedup();
    s
}

/// Default grid: 20 log-spaced scales from 16 to `T/4`.
pub fn default_scales(len: usize) -> Vec<usize> {
    log_scales(16, len / 4, 20)
}

/// Orthonormal polynomial basis (degree 0..=order) on the points `0..s`.
fn poly_basis(s: usize, order: usize) -> Vec<Vec<f64>> {
    let c = (s as f64 - 1.0) / 2.0;
    let h = if s > 1 { c } else { 1.0 };
    let x: Vec<f64> = (0..s).map(|i| (i as f64 - c) / h).collect();
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(order + 1);
    for d in 0..=order {
        let mut v: Vec<f64> = x.iter().map(|t| t.powi(d as i32)).collect();
        // Two Gram–Schmidt sweeps keep the basis orthogonal to rounding precision.
        for _ in 0..2 {
            for q in &basis {
                let dot: f64 = v.iter().zip(q).map(|(a, b)| a * b).sum();
                for (a, b) in v.iter_mut().zip(q) {
                    *a -= dot * b;
                }
            }
        }
        let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        for a in v.iter_mut() {
            *a /= norm;
        }
        basis.push(v);
    }
    basis
}

fn window_variance(y: &[f64], basis: &[Vec<f64>], resid: &mut Vec<f64>) -> f64 {
    resid.clear();
    resid.extend_from_slice(y);
    for q in basis {
        let dot: f64 = resid.iter().zip(q).map(|(a, b)| a * b).sum();
        for (a, b) in resid.iter_mut().zip(q) {
            *a -= dot * b;
        }
    }
    resid.iter().map(|r| r * r).sum::<f64>() / y.len() as f64
}

fn scale_fluctuation(p: &Profile, s: usize, order: usize) -> Option<(f64, usize)> {
    let t = p.values.len();
    let ns = t / s;
    if ns == 0 {
        return None;
    }
    let basis = poly_basis(s, order);
    let mut resid = Vec::with_capacity(s);
    let mut total = 0.0;
    let mut used = 0;
    let starts = (0..ns).map(|v| v * s).chain((0..ns).map(|v| t - (v + 1) * s));
    for start in starts {
        let range = start..start + s;
        if p.na[range.clone()].iter().any(|&f| f) {
            continue;
        }
        total += window_variance(&p.values[range], &basis, &mut resid);
        used += 1;
    }
    (used > 0).then(|| ((total / used as f64).sqrt(), used))
}

/// Fluctuation function at the given scales with order-`m` detrending.
pub fn fluctuation(series: &[Option<f64>], scales: &[usize], order: usize) -> Result<FluctuationCurve> {
    let p = profile(series)?;
    let t = series.len();
    if t / 4 < order + 2 {
        return Err(Error::InsufficientData(format!(
            "{t} samples leave no admissible scale for order-{order} detrending"
        )));
    }
    if let Some(&s) = scales.iter().find(|&&s| s < order + 2 || s > t / 4) {
        return Err(Error::InvalidArgument(format!(
            "scale {s} outside [{}, {}]",
            order + 2,
            t / 4
        )));
    }
    if scales.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument("scales must be strictly increasing".into()));
    }
    let results: Vec<Option<(f64, usize)>> = scales.par_iter().map(|&s| scale_fluctuation(&p, s, order)).collect();
    let mut curve = FluctuationCurve {
        scales: Vec::new(),
        fluctuation: Vec::new(),
        detrend_order: order,
        segments_used: Vec::new(),
        dropped_scales: Vec::new(),
    };
    for (&s, r) in scales.iter().zip(results) {
        match r {
            Some((f, used)) if f > 0.0 => {
                curve.scales.push(s);
                curve.fluctuation.push(f);
                curve.segments_used.push(used);
            }
            _ => {
                log::warn!("DFA scale {s} dropped: no usable window");
                curve.dropped_scales.push(s);
            }
        }
    }
    if curve.scales.is_empty() {
        return Err(Error::InsufficientData("no scale had a usable window".into()));
    }
    Ok(curve)
}

/// Interpretations of a DFA exponent as a Hurst exponent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HurstReadings {
    /// `H ≈ α`, valid for stationary (noise-like) signals.
    pub stationary: f64,
    /// `H ≈ α − 1`, valid for integrated (walk-like) signals.
    pub integrated: f64,
    /// `α > 1`.
    pub integrated_regime: bool,
}

impl HurstReadings {
    pub fn from_alpha(alpha: f64) -> Self {
        Self {
            stationary: alpha,
            integrated: alpha - 1.0,
            integrated_regime: alpha > 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub alpha: f64,
    pub alpha_stderr: f64,
    pub fit_range: (usize, usize),
    pub crossover: Option<usize>,
    pub alpha_below: Option<f64>,
    pub alpha_above: Option<f64>,
    pub hurst: HurstReadings,
}

fn log_points(curve: &FluctuationCurve, lo: usize, hi: usize) -> (Vec<f64>, Vec<f64>, Vec<usize>) {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut ss = Vec::new();
    for (&s, &f) in curve.scales.iter().zip(&curve.fluctuation) {
        if s >= lo && s <= hi {
            xs.push((s as f64).ln());
            ys.push(f.ln());
            ss.push(s);
        }
    }
    (xs, ys, ss)
}

/// Least-squares slope of `ln F` against `ln s` over scales in `[lo, hi]`.
pub fn fit_alpha(curve: &FluctuationCurve, fit_range: (usize, usize)) -> Result<ScalingFit> {
    let (xs, ys, ss) = log_points(curve, fit_range.0, fit_range.1);
    if xs.len() < 4 {
        return Err(Error::InsufficientScales { needed: 4, got: xs.len() });
    }
    let fit = linear_fit(&xs, &ys)?;
    Ok(ScalingFit {
        alpha: fit.slope,
        alpha_stderr: fit.slope_stderr,
        fit_range: (ss[0], ss[ss.len() - 1]),
        crossover: None,
        alpha_below: None,
        alpha_above: None,
        hurst: HurstReadings::from_alpha(fit.slope),
    })
}

/// Fit over every scale of the curve.
pub fn fit_alpha_all(curve: &FluctuationCurve) -> Result<ScalingFit> {
    fit_alpha(curve, (0, usize::MAX))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrossoverConfig {
    /// Minimum scales on each side of the breakpoint.
    pub min_side: usize,
    /// Minimum relative SSE improvement of the two-line fit over the single line.
    pub min_improvement: f64,
}

impl Default for CrossoverConfig {
    fn default() -> Self {
        Self {
            min_side: 4,
            min_improvement: 0.05,
        }
    }
}

/// Two-regime fit: exhaustive breakpoint search with independent lines on each side.
///
/// The crossover `s_c` is the last scale of the lower regime.
pub fn fit_crossover(curve: &FluctuationCurve) -> Result<ScalingFit> {
    fit_crossover_with(curve, &CrossoverConfig::default())
}

pub fn fit_crossover_with(curve: &FluctuationCurve, cfg: &CrossoverConfig) -> Result<ScalingFit> {
    let n = curve.scales.len();
    let needed = (2 * cfg.min_side).max(8);
    if n < needed {
        return Err(Error::InsufficientScales { needed, got: n });
    }
    let xs: Vec<f64> = curve.scales.iter().map(|&s| (s as f64).ln()).collect();
    let ys: Vec<f64> = curve.fluctuation.iter().map(|f| f.ln()).collect();
    let single = linear_fit(&xs, &ys)?;
    let mut best: Option<(f64, usize, f64, f64)> = None;
    // Lower regime: indices 0..=c, upper: c+1..n.
    for c in (cfg.min_side - 1)..(n - cfg.min_side) {
        let lo = linear_fit(&xs[..=c], &ys[..=c])?;
        let hi = linear_fit(&xs[c + 1..], &ys[c + 1..])?;
        let sse = lo.sse + hi.sse;
        if best.is_none_or(|b| sse < b.0) {
            best = Some((sse, c, lo.slope, hi.slope));
        }
    }
    let mut fit = ScalingFit {
        alpha: single.slope,
        alpha_stderr: single.slope_stderr,
        fit_range: (curve.scales[0], curve.scales[n - 1]),
        crossover: None,
        alpha_below: None,
        alpha_above: None,
        hurst: HurstReadings::from_alpha(single.slope),
    };
    let scale = ys.iter().map(|y| y * y).sum::<f64>().max(1.0);
    if single.sse <= 1e-20 * scale {
        return Ok(fit);
    }
    let (sse, c, below, above) = best.expect("candidate range is non-empty");
    if (single.sse - sse) / single.sse >= cfg.min_improvement {
        fit.crossover = Some(curve.scales[c]);
        fit.alpha_below = Some(below);
        fit.alpha_above = Some(above);
    }
    Ok(fit)
}
