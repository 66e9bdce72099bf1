//! Statistical characterization battery for power series and their increments.

use rand::seq::SliceRandom;
use rayon::prelude::*;
use rustfft::{num_complex::Complex, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::rng::{derive_seed, seeded};
use crate::series::{lagged_differences, standardize_values, STEP_SECONDS};
use crate::stats::{linear_fit, mean_std, present, quantile_sorted};
use crate::{Error, Result};

/// Equal-width histogram normalised to a probability density.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub bin_edges: Vec<f64>,
    pub counts: Vec<usize>,
    pub density: Vec<f64>,
    pub n_total: usize,
}

impl Histogram {
    pub fn bin_centers(&self) -> Vec<f64> {
        self.bin_edges.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
    }

    /// Indices of density maxima whose topographic prominence is at least
    /// `min_prominence` times the highest density.
    ///
    /// The density is taken as zero outside the histogram support, so edge bins can be
    /// modes. A plateau counts once, at its first bin. Prominence is the height above the
    /// higher of the lowest points between the peak and a taller bin on either side.
    pub fn modes(&self, min_prominence: f64) -> Vec<usize> {
        let mut d = Vec::with_capacity(self.density.len() + 2);
        d.push(0.0);
        d.extend_from_slice(&self.density);
        d.push(0.0);
        let top = self.density.iter().cloned().fold(0.0, f64::max);
        let n = d.len();
        let mut peaks = Vec::new();
        let mut i = 1;
        while i + 1 < n {
            let mut j = i;
            while j + 2 < n && d[j + 1] == d[i] {
                j += 1;
            }
            let h = d[i];
            if h > 0.0 && d[i - 1] < h && d[j + 1] < h {
                let mut left = h;
                let mut k = i;
                while k > 0 && d[k - 1] <= h {
                    k -= 1;
                    left = left.min(d[k]);
                }
                let mut right = h;
                let mut k = j;
                while k + 1 < n && d[k + 1] <= h {
                    k += 1;
                    right = right.min(d[k]);
                }
                if h - left.max(right) >= min_prominence * top {
                    peaks.push(i - 1);
                }
            }
            i = j + 1;
        }
        peaks
    }
}

/// Empirical density of the non-NA values on `n_bins` equal bins spanning `[min, max]`.
pub fn pdf_histogram(values: &[Option<f64>], n_bins: usize) -> Result<Histogram> {
    if n_bins < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 bins, got {n_bins}")));
    }
    let xs = present(values);
    let lo = xs.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if xs.len() < 2 || !(hi > lo) {
        return Err(Error::InsufficientData(
            "histogram needs at least two distinct non-NA values".into(),
        ));
    }
    histogram_in(&xs, lo, hi, n_bins)
}

/// Histogram of `xs` on `n_bins` equal bins over `[lo, hi]`; values outside are ignored.
pub fn histogram_in(xs: &[f64], lo: f64, hi: f64, n_bins: usize) -> Result<Histogram> {
    if n_bins < 1 || !(hi > lo) {
        return Err(Error::InvalidArgument(format!("bad histogram range [{lo}, {hi}] with {n_bins} bins")));
    }
    let width = (hi - lo) / n_bins as f64;
    let bin_edges: Vec<f64> = (0..=n_bins)
        .map(|i| if i == n_bins { hi } else { lo + width * i as f64 })
        .collect();
    let mut counts = vec![0usize; n_bins];
    for &x in xs.iter().filter(|&&x| x >= lo && x <= hi) {
        let k = (((x - lo) / width) as usize).min(n_bins - 1);
        counts[k] += 1;
    }
    let n_total: usize = counts.iter().sum();
    if n_total == 0 {
        return Err(Error::InsufficientData("no values inside the histogram range".into()));
    }
    let density = counts
        .iter()
        .zip(bin_edges.windows(2))
        .map(|(&c, w)| c as f64 / (n_total as f64 * (w[1] - w[0])))
        .collect();
    Ok(Histogram {
        bin_edges,
        counts,
        density,
        n_total,
    })
}

/// Fraction of non-NA values falling strictly inside any of the open `windows`.
pub fn window_mass(values: &[Option<f64>], windows: &[(f64, f64)]) -> f64 {
    let xs = present(values);
    if xs.is_empty() {
        return 0.0;
    }
    let hits = xs
        .iter()
        .filter(|&&x| windows.iter().any(|&(a, b)| x > a && x < b))
        .count();
    hits as f64 / xs.len() as f64
}

/// Lagged Pearson autocorrelation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcfCurve {
    /// Lags in 10-minute steps.
    pub lags: Vec<usize>,
    /// Correlation per lag; `None` where fewer than two valid pairs exist.
    pub theta: Vec<Option<f64>>,
    /// Half-width of the shuffle-surrogate significance band, when computed.
    pub band_halfwidth: Option<f64>,
    pub n_shuffles: usize,
}

impl AcfCurve {
    pub fn lag_seconds(&self) -> Vec<i64> {
        self.lags.iter().map(|&l| l as i64 * STEP_SECONDS).collect()
    }
}

fn pair_correlation(x: &[Option<f64>], lag: usize) -> Option<f64> {
    let (mut n, mut sa, mut sb) = (0usize, 0.0, 0.0);
    for (a, b) in x.iter().zip(&x[lag..]) {
        if let (Some(a), Some(b)) = (a, b) {
            n += 1;
            sa += a;
            sb += b;
        }
    }
    if n < 2 {
        return None;
    }
    let (ma, mb) = (sa / n as f64, sb / n as f64);
    let (mut cab, mut caa, mut cbb) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(&x[lag..]) {
        if let (Some(a), Some(b)) = (a, b) {
            let (da, db) = (a - ma, b - mb);
            cab += da * db;
            caa += da * da;
            cbb += db * db;
        }
    }
    if caa <= 0.0 || cbb <= 0.0 {
        return None;
    }
    Some((cab / (caa * cbb).sqrt()).clamp(-1.0, 1.0))
}

/// Pearson correlation between `x(t)` and `x(t + τ)` for `τ = 0..=max_lag`, computed over
/// the index pairs where both values are present.
pub fn acf(series: &[Option<f64>], max_lag: usize) -> Result<AcfCurve> {
    if max_lag >= series.len() {
        return Err(Error::InvalidArgument(format!(
            "max_lag {max_lag} must be below the series length {}",
            series.len()
        )));
    }
    let xs = present(series);
    if xs.len() < 2 {
        return Err(Error::InsufficientData("autocorrelation needs 2 non-NA values".into()));
    }
    let (_, sd) = mean_std(&xs);
    if sd == 0.0 {
        return Err(Error::DegenerateSeries("constant series has no autocorrelation".into()));
    }
    let lags: Vec<usize> = (0..=max_lag).collect();
    let theta = lags
        .iter()
        .map(|&l| if l == 0 { Some(1.0) } else { pair_correlation(series, l) })
        .collect();
    Ok(AcfCurve {
        lags,
        theta,
        band_halfwidth: None,
        n_shuffles: 0,
    })
}

/// Shuffle the non-NA values among the non-NA positions.
pub fn shuffle_present(series: &[Option<f64>], seed: u64) -> Vec<Option<f64>> {
    let mut vals = present(series);
    vals.shuffle(&mut seeded(seed));
    let mut it = vals.into_iter();
    series.iter().map(|v| v.and_then(|_| it.next())).collect()
}

/// Twice the standard deviation of shuffle-surrogate autocorrelations, pooled over lags
/// `1..=max_lag`, all shuffles and all supplied series.
pub fn significance_band(
    series: &[&[Option<f64>]],
    max_lag: usize,
    n_shuffles: usize,
    seed: u64,
) -> Result<f64> {
    if n_shuffles < 10 {
        return Err(Error::InvalidArgument(format!("need at least 10 shuffles, got {n_shuffles}")));
    }
    for s in series {
        acf(s, max_lag)?;
    }
    let jobs: Vec<(usize, usize)> = (0..series.len())
        .flat_map(|i| (0..n_shuffles).map(move |k| (i, k)))
        .collect();
    let pooled: Vec<Vec<f64>> = jobs
        .par_iter()
        .map(|&(i, k)| {
            let surrogate = shuffle_present(series[i], derive_seed(seed, (i * n_shuffles + k) as u64));
            (1..=max_lag)
                .filter_map(|l| pair_correlation(&surrogate, l))
                .collect()
        })
        .collect();
    let all: Vec<f64> = pooled.into_iter().flatten().collect();
    if all.len() < 2 {
        return Err(Error::InsufficientData("no surrogate correlations available".into()));
    }
    Ok(2.0 * mean_std(&all).1)
}

/// ACF with its surrogate band attached.
pub fn acf_with_band(series: &[Option<f64>], max_lag: usize, n_shuffles: usize, seed: u64) -> Result<AcfCurve> {
    let mut curve = acf(series, max_lag)?;
    curve.band_halfwidth = Some(significance_band(&[series], max_lag, n_shuffles, seed)?);
    curve.n_shuffles = n_shuffles;
    Ok(curve)
}

/// Periodogram `|X_k|² / L` of a real sequence at `k = 1..=L/2`.
pub fn periodogram(x: &[f64]) -> Vec<f64> {
    let len = x.len();
    let mut buf: Vec<Complex<f64>> = x.iter().map(|&v| Complex::new(v, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(len).process(&mut buf);
    (1..=len / 2).map(|k| buf[k].norm_sqr() / len as f64).collect()
}

/// Segment-averaged spectrum with a log–log slope fit `E(f) ∝ f^(−β)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumFit {
    /// Frequencies in Hz.
    pub frequencies: Vec<f64>,
    pub power: Vec<f64>,
    pub n_segments: usize,
    pub beta: f64,
    pub beta_stderr: f64,
    /// Fit band `(f_lo, f_hi)` in Hz, inclusive.
    pub fit_range: (f64, f64),
}

pub const MIN_SEGMENT_LEN: usize = 64;

/// Spectrum of one series split into `n_segments` equal segments.
pub fn spectrum(series: &[Option<f64>], n_segments: usize, fit_range: (f64, f64)) -> Result<SpectrumFit> {
    spectrum_ensemble(&[series], n_segments, fit_range)
}

/// Average the segment periodograms of several equally long series and fit `β`.
///
/// Each segment has NA slots replaced by its mean and the mean removed before the
/// transform. Segments from all series are averaged with equal weight.
pub fn spectrum_ensemble(series: &[&[Option<f64>]], n_segments: usize, fit_range: (f64, f64)) -> Result<SpectrumFit> {
    if n_segments == 0 || series.is_empty() {
        return Err(Error::InvalidArgument("need at least one series and one segment".into()));
    }
    let len = series[0].len() / n_segments;
    if series.iter().any(|s| s.len() / n_segments != len) {
        return Err(Error::InvalidArgument("ensemble series must share a segment length".into()));
    }
    if len < MIN_SEGMENT_LEN {
        return Err(Error::InsufficientData(format!(
            "segments of {len} samples are shorter than {MIN_SEGMENT_LEN}"
        )));
    }
    let (f_lo, f_hi) = fit_range;
    if !(f_lo > 0.0 && f_hi > f_lo) {
        return Err(Error::InvalidArgument(format!("empty fit range ({f_lo}, {f_hi})")));
    }
    let segments: Vec<&[Option<f64>]> = series
        .iter()
        .flat_map(|s| (0..n_segments).map(move |i| &s[i * len..(i + 1) * len]))
        .collect();
    let spectra: Vec<Vec<f64>> = segments
        .par_iter()
        .map(|seg| {
            let vals = present(seg);
            let m = if vals.is_empty() { 0.0 } else { vals.iter().sum::<f64>() / vals.len() as f64 };
            let x: Vec<f64> = seg.iter().map(|v| v.unwrap_or(m) - m).collect();
            periodogram(&x)
        })
        .collect();
    let nk = len / 2;
    let mut power = vec![0.0; nk];
    for sp in &spectra {
        for (p, v) in power.iter_mut().zip(sp) {
            *p += v;
        }
    }
    for p in power.iter_mut() {
        *p /= spectra.len() as f64;
    }
    let df = 1.0 / (len as f64 * STEP_SECONDS as f64);
    let frequencies: Vec<f64> = (1..=nk).map(|k| k as f64 * df).collect();
    let eps = 1e-9 * df;
    let (lx, ly): (Vec<f64>, Vec<f64>) = frequencies
        .iter()
        .zip(&power)
        .filter(|&(&f, &p)| f >= f_lo - eps && f <= f_hi + eps && p > 0.0)
        .map(|(f, p)| (f.ln(), p.ln()))
        .unzip();
    if lx.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "only {} spectral points inside the fit range",
            lx.len()
        )));
    }
    let fit = linear_fit(&lx, &ly)?;
    Ok(SpectrumFit {
        frequencies,
        power,
        n_segments,
        beta: -fit.slope,
        beta_stderr: fit.slope_stderr,
        fit_range,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub mean: f64,
    pub std: f64,
    pub skewness: f64,
    pub excess_kurtosis: f64,
}

/// Population moments of the non-NA values.
pub fn moments(values: &[Option<f64>]) -> Result<Moments> {
    let xs = present(values);
    if xs.len() < 4 {
        return Err(Error::InsufficientData(format!("moments need 4 values, got {}", xs.len())));
    }
    let (mean, std) = mean_std(&xs);
    if std == 0.0 {
        return Err(Error::DegenerateSeries("zero variance".into()));
    }
    let n = xs.len() as f64;
    let (m3, m4) = xs.iter().fold((0.0, 0.0), |(a, b), x| {
        let z = (x - mean) / std;
        (a + z * z * z, b + z * z * z * z)
    });
    Ok(Moments {
        mean,
        std,
        skewness: m3 / n,
        excess_kurtosis: m4 / n - 3.0,
    })
}

/// Moments of an increment series (its raw values).
pub fn increment_moments(inc: &crate::series::IncrementSeries) -> Result<Moments> {
    moments(&inc.values)
}

/// Matched empirical quantiles at probabilities `(i − 0.5) / n_quantiles`.
pub fn qq_pairs(a: &[Option<f64>], b: &[Option<f64>], n_quantiles: usize) -> Result<Vec<(f64, f64)>> {
    let mut xa = present(a);
    let mut xb = present(b);
    if n_quantiles == 0 || xa.len() < n_quantiles || xb.len() < n_quantiles {
        return Err(Error::InsufficientData(format!(
            "need {n_quantiles} values on both sides, got {} and {}",
            xa.len(),
            xb.len()
        )));
    }
    xa.sort_by(f64::total_cmp);
    xb.sort_by(f64::total_cmp);
    Ok((1..=n_quantiles)
        .map(|i| {
            let p = (i as f64 - 0.5) / n_quantiles as f64;
            (quantile_sorted(&xa, p), quantile_sorted(&xb, p))
        })
        .collect())
}

/// Side-by-side distance metrics between a measured and a simulated series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesComparison {
    /// Largest gap between matched quantiles of the values.
    pub qq_max_deviation: f64,
    /// Same for standardized one-step increments.
    pub qq_increment_max_deviation: f64,
    /// Largest |Θ_a(τ) − Θ_b(τ)| over lags where both are defined.
    pub acf_max_abs_diff: f64,
    /// L1 distance between densities on shared bins (0 to 2).
    pub pdf_l1: f64,
    pub beta: (f64, f64),
    pub increment_excess_kurtosis: (f64, f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComparisonOptions {
    pub n_quantiles: usize,
    pub max_lag: usize,
    pub n_bins: usize,
    pub n_segments: usize,
    pub fit_range: (f64, f64),
}

impl Default for ComparisonOptions {
    fn default() -> Self {
        Self { n_quantiles: 200, max_lag: 1008, n_bins: 100, n_segments: 1, fit_range: (1.0 / 864_000.0, 1.0 / 21_600.0) }
    }
}

pub fn compare_series(a: &[Option<f64>], b: &[Option<f64>], opts: &ComparisonOptions) -> Result<SeriesComparison> {
    let max_gap = |pairs: Vec<(f64, f64)>| pairs.iter().map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    let std_inc = |v: &[Option<f64>]| standardize_values(&lagged_differences(v, 1)).map(|s| s.values);
    let (ia, ib) = (std_inc(a)?, std_inc(b)?);

    let max_lag = opts.max_lag.min(a.len().min(b.len()).saturating_sub(2));
    let (ta, tb) = (acf(a, max_lag)?, acf(b, max_lag)?);
    let acf_max_abs_diff = ta
        .theta
        .iter()
        .zip(&tb.theta)
        .filter_map(|(x, y)| Some((x.as_ref()? - y.as_ref()?).abs()))
        .fold(0.0, f64::max);

    let (xa, xb) = (present(a), present(b));
    let lo = xa.iter().chain(&xb).cloned().fold(f64::INFINITY, f64::min);
    let hi = xa.iter().chain(&xb).cloned().fold(f64::NEG_INFINITY, f64::max);
    let (ha, hb) = (histogram_in(&xa, lo, hi, opts.n_bins)?, histogram_in(&xb, lo, hi, opts.n_bins)?);
    let width = (hi - lo) / opts.n_bins as f64;
    let pdf_l1 = ha.density.iter().zip(&hb.density).map(|(p, q)| (p - q).abs() * width).sum();

    let (sa, sb) = (spectrum(a, opts.n_segments, opts.fit_range)?, spectrum(b, opts.n_segments, opts.fit_range)?);
    Ok(SeriesComparison {
        qq_max_deviation: max_gap(qq_pairs(a, b, opts.n_quantiles)?),
        qq_increment_max_deviation: max_gap(qq_pairs(&ia, &ib, opts.n_quantiles)?),
        acf_max_abs_diff,
        pdf_l1,
        beta: (sa.beta, sb.beta),
        increment_excess_kurtosis: (moments(&ia)?.excess_kurtosis, moments(&ib)?.excess_kurtosis),
    })
}
