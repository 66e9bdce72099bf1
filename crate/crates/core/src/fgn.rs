//! Exact sampling of fractional Gaussian noise.
//!
//! Unit-variance, unit-spacing FGN has autocovariance
//! `γ(k) = ½(|k+1|^{2H} − 2|k|^{2H} + |k−1|^{2H})`. Two exact samplers are provided:
//! the O(n²) Durbin–Levinson recursion and the O(n log n) circulant embedding
//! (Davies–Harte).

use rand_distr::{Distribution, StandardNormal};
use rustfft::{num_complex::Complex, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::rng::seeded;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    DurbinLevinson,
    #[default]
    Circulant,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FgnSpec {
    pub hurst: f64,
    pub n: usize,
    pub seed: u64,
    pub method: Method,
}

impl FgnSpec {
    pub fn new(hurst: f64, n: usize, seed: u64, method: Method) -> Result<Self> {
        let spec = Self { hurst, n, seed, method };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        check_hurst(self.hurst)?;
        if self.n == 0 {
            return Err(Error::InvalidArgument("FGN length must be at least 1".into()));
        }
        Ok(())
    }
}

fn check_hurst(h: f64) -> Result<()> {
    if h > 0.0 && h < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("Hurst exponent must lie in (0, 1), got {h}")))
    }
}

fn gamma(h: f64, k: usize) -> f64 {
    if k == 0 {
        return 1.0;
    }
    let k = k as f64;
    let e = 2.0 * h;
    0.5 * ((k + 1.0).powf(e) - 2.0 * k.powf(e) + (k - 1.0).powf(e))
}

/// Autocovariance of unit-variance FGN at lag `k`.
pub fn autocovariance(hurst: f64, k: usize) -> Result<f64> {
    check_hurst(hurst)?;
    Ok(gamma(hurst, k))
}

/// Default size limit for the quadratic-cost Durbin–Levinson sampler.
pub const DL_LIMIT: usize = 1 << 15;

/// Durbin–Levinson sampling with the default size limit.
pub fn sample_dl(spec: &FgnSpec) -> Result<Vec<f64>> {
    sample_dl_with_limit(spec, DL_LIMIT)
}

pub fn sample_dl_with_limit(spec: &FgnSpec, limit: usize) -> Result<Vec<f64>> {
    spec.validate()?;
    let n = spec.n;
    if n > limit {
        return Err(Error::CapacityExceeded { n, limit });
    }
    let h = spec.hurst;
    let cov: Vec<f64> = (0..n).map(|k| gamma(h, k)).collect();
    let mut rng = seeded(spec.seed);
    let mut out = Vec::with_capacity(n);
    let mut phi: Vec<f64> = Vec::with_capacity(n);
    let mut prev: Vec<f64> = Vec::with_capacity(n);
    let mut v = cov[0];
    let z: f64 = StandardNormal.sample(&mut rng);
    out.push(v.sqrt() * z);
    for t in 1..n {
        // Partial autocorrelation at lag t.
        let num = cov[t] - phi.iter().enumerate().map(|(j, p)| p * cov[t - 1 - j]).sum::<f64>();
        let kappa = num / v;
        prev.clear();
        prev.extend_from_slice(&phi);
        for j in 0..phi.len() {
            phi[j] = prev[j] - kappa * prev[prev.len() - 1 - j];
        }
        phi.push(kappa);
        v *= 1.0 - kappa * kappa;
        let pred: f64 = phi.iter().enumerate().map(|(j, p)| p * out[t - 1 - j]).sum();
        let z: f64 = StandardNormal.sample(&mut rng);
        out.push(pred + v.max(0.0).sqrt() * z);
    }
    Ok(out)
}

/// Outcome of the circulant sampler.
#[derive(Debug, Clone, PartialEq)]
pub struct CirculantSample {
    pub values: Vec<f64>,
    /// Number of slightly negative embedding eigenvalues clamped to zero.
    pub clamped: usize,
    /// True when the embedding was not usable and Durbin–Levinson was used instead.
    pub fell_back: bool,
}

/// Eigenvalue tolerance for the embedding.
pub const EIGEN_TOL: f64 = 1e-10;

/// Circulant-embedding sampler; falls back to Durbin–Levinson (without size limit)
/// when the embedding has an eigenvalue below `−1e−10`.
pub fn sample_circulant(spec: &FgnSpec) -> Result<Vec<f64>> {
    Ok(sample_circulant_detailed(spec)?.values)
}

pub fn sample_circulant_detailed(spec: &FgnSpec) -> Result<CirculantSample> {
    spec.validate()?;
    let n = spec.n;
    if n == 1 {
        let z: f64 = StandardNormal.sample(&mut seeded(spec.seed));
        return Ok(CirculantSample { values: vec![z], clamped: 0, fell_back: false });
    }
    let half = (n - 1).next_power_of_two().max(1);
    let m = 2 * half;
    let mut row: Vec<Complex<f64>> = Vec::with_capacity(m);
    for k in 0..=half {
        row.push(Complex::new(gamma(spec.hurst, k), 0.0));
    }
    for k in (1..half).rev() {
        row.push(Complex::new(gamma(spec.hurst, k), 0.0));
    }
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(m);
    fft.process(&mut row);
    let mut clamped = 0;
    let mut lambda = Vec::with_capacity(m);
    for c in &row {
        let l = c.re;
        if l < -EIGEN_TOL {
            log::warn!("circulant embedding not definite (eigenvalue {l}); using Durbin–Levinson");
            let values = sample_dl_with_limit(spec, usize::MAX)?;
            return Ok(CirculantSample { values, clamped: 0, fell_back: true });
        }
        if l < 0.0 {
            clamped += 1;
        }
        lambda.push(l.max(0.0));
    }
    let mut rng = seeded(spec.seed);
    let mut w: Vec<Complex<f64>> = lambda
        .iter()
        .map(|&l| {
            let a: f64 = StandardNormal.sample(&mut rng);
            let b: f64 = StandardNormal.sample(&mut rng);
            Complex::new(a, b) * (l / m as f64).sqrt()
        })
        .collect();
    fft.process(&mut w);
    Ok(CirculantSample {
        values: w[..n].iter().map(|c| c.re).collect(),
        clamped,
        fell_back: false,
    })
}

/// Sample with the method named in the spec.
pub fn sample(spec: &FgnSpec) -> Result<Vec<f64>> {
    match spec.method {
        Method::DurbinLevinson => sample_dl(spec),
        Method::Circulant => sample_circulant(spec),
    }
}
