//! Rule-based flagging of implausible SCADA values.
//!
//! Three rules run in order on the average power channel; a flagged slot has all of
//! its power channels set to NA. A slot flagged by an earlier rule is not counted
//! again by a later one.
//!
//! 1. *Consecutive identical*: the average equals the previous slot's average when both
//!    are rounded to `precision_digits` decimals, unless the slot's min and max are
//!    also equal to the average (pinned output such as constant rated power).
//! 2. *Zero std*: the 10-minute standard deviation is exactly zero.
//! 3. *Unphysical ramp*: `|P(t+1) − P(t)| / P_+ > xi0` and the two intervals do not
//!    overlap up to the factor `q`: `P_min(t+1) > q·P_max(t)` for rises,
//!    `P_min(t) > q·P_max(t+1)` for drops. The arriving value `P(t+1)` is flagged.

use serde::{Deserialize, Serialize};

use crate::series::TurbineSeries;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CleansingConfig {
    /// Relative ramp threshold (fraction of rated power).
    pub xi0: f64,
    /// Overlap factor for the min/max interval test.
    pub q: f64,
    /// Rated power `P_+` in kW.
    pub rated_power: f64,
    /// Decimal places used when comparing consecutive averages.
    pub precision_digits: u32,
}

impl Default for CleansingConfig {
    fn default() -> Self {
        Self {
            xi0: 0.67,
            q: 0.99,
            rated_power: 3600.0,
            precision_digits: 5,
        }
    }
}

impl CleansingConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.xi0 > 0.0) {
            return Err(Error::InvalidArgument(format!("xi0 must be positive, got {}", self.xi0)));
        }
        if !(self.q > 0.0 && self.q <= 1.0) {
            return Err(Error::InvalidArgument(format!("q must lie in (0, 1], got {}", self.q)));
        }
        if !(self.rated_power > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "rated power must be positive, got {}",
                self.rated_power
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleCounts {
    /// Always zero for well-formed series; duplicates are rejected at ingestion.
    pub duplicate_timestamp: usize,
    pub consecutive_identical: usize,
    pub zero_std: usize,
    pub unphysical_ramp: usize,
}

impl RuleCounts {
    pub fn total(&self) -> usize {
        self.duplicate_timestamp + self.consecutive_identical + self.zero_std + self.unphysical_ramp
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CleansingReport {
    pub turbine_id: String,
    pub counts: RuleCounts,
    /// Rules that could not run because a required channel is absent.
    pub skipped_rules: Vec<String>,
    pub na_fraction_before: f64,
    pub na_fraction_after: f64,
}

fn rounded(v: f64, digits: u32) -> f64 {
    let scale = 10f64.powi(digits as i32);
    (v * scale).round() / scale
}

/// Apply the three cleansing rules and return the cleaned copy with its report.
pub fn cleanse(series: &TurbineSeries, cfg: &CleansingConfig) -> Result<(TurbineSeries, CleansingReport)> {
    cfg.validate()?;
    let n = series.len();
    let avg = series.power_avg();
    let mut out = series.clone();
    let mut counts = RuleCounts::default();
    let mut skipped = Vec::new();
    let same = |a: f64, b: f64| rounded(a, cfg.precision_digits) == rounded(b, cfg.precision_digits);

    // Rule 1 compares against the original previous value.
    match (series.power_min(), series.power_max()) {
        (Some(pmin), Some(pmax)) => {
            for i in 1..n {
                let (Some(prev), Some(cur)) = (avg[i - 1], avg[i]) else {
                    continue;
                };
                if !same(prev, cur) {
                    continue;
                }
                let pinned = matches!((pmin[i], pmax[i]), (Some(lo), Some(hi)) if same(lo, cur) && same(hi, cur));
                if !pinned {
                    out.invalidate_power(i);
                    counts.consecutive_identical += 1;
                }
            }
        }
        _ => skipped.push("consecutive_identical".to_owned()),
    }

    match series.power_std() {
        Some(pstd) => {
            for i in 0..n {
                if out.power_avg()[i].is_some() && pstd[i] == Some(0.0) {
                    out.invalidate_power(i);
                    counts.zero_std += 1;
                }
            }
        }
        None => skipped.push("zero_std".to_owned()),
    }

    // Rule 3 sees the series after rules 1 and 2; all pairs are judged on that state.
    match (out.power_min().map(<[_]>::to_vec), out.power_max().map(<[_]>::to_vec)) {
        (Some(pmin), Some(pmax)) => {
            let cur_avg = out.power_avg().to_vec();
            let mut flags = Vec::new();
            for t in 0..n.saturating_sub(1) {
                let (Some(p0), Some(p1)) = (cur_avg[t], cur_avg[t + 1]) else {
                    continue;
                };
                let xi = (p1 - p0) / cfg.rated_power;
                if xi.abs() <= cfg.xi0 {
                    continue;
                }
                let disjoint = if xi > 0.0 {
                    matches!((pmin[t + 1], pmax[t]), (Some(lo1), Some(hi0)) if lo1 > cfg.q * hi0)
                } else {
                    matches!((pmin[t], pmax[t + 1]), (Some(lo0), Some(hi1)) if lo0 > cfg.q * hi1)
                };
                if disjoint {
                    flags.push(t + 1);
                }
            }
            for i in flags {
                out.invalidate_power(i);
                counts.unphysical_ramp += 1;
            }
        }
        _ => skipped.push("unphysical_ramp".to_owned()),
    }

    let report = CleansingReport {
        turbine_id: series.turbine_id().to_owned(),
        counts,
        skipped_rules: skipped,
        na_fraction_before: series.na_fraction(),
        na_fraction_after: out.na_fraction(),
    };
    Ok((out, report))
}
