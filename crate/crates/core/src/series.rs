//! Time-series containers on the fixed 10-minute grid.

use chrono::{DateTime, Duration, Utc};
use serde::{Deserialize, Serialize};

use crate::stats::mean_std;
use crate::{Error, Result};

/// Sampling interval of every series, in seconds.
pub const STEP_SECONDS: i64 = 600;

/// Samples per day on the 10-minute grid.
pub const STEPS_PER_DAY: usize = 144;

/// A turbine's 10-minute SCADA channels. Gaps are NA slots, never missing rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TurbineSeries {
    turbine_id: String,
    t0: DateTime<Utc>,
    power_avg: Vec<Option<f64>>,
    power_min: Option<Vec<Option<f64>>>,
    power_max: Option<Vec<Option<f64>>>,
    power_std: Option<Vec<Option<f64>>>,
    wind_speed: Option<Vec<Option<f64>>>,
}

impl TurbineSeries {
    /// Series with only the average power channel.
    pub fn from_power(
        turbine_id: impl Into<String>,
        t0: DateTime<Utc>,
        power_avg: Vec<Option<f64>>,
    ) -> Self {
        Self {
            turbine_id: turbine_id.into(),
            t0,
            power_avg,
            power_min: None,
            power_max: None,
            power_std: None,
            wind_speed: None,
        }
    }

    /// Full constructor; checks channel lengths and `min <= avg <= max`.
    pub fn new(
        turbine_id: impl Into<String>,
        t0: DateTime<Utc>,
        power_avg: Vec<Option<f64>>,
        power_min: Option<Vec<Option<f64>>>,
        power_max: Option<Vec<Option<f64>>>,
        power_std: Option<Vec<Option<f64>>>,
        wind_speed: Option<Vec<Option<f64>>>,
    ) -> Result<Self> {
        let n = power_avg.len();
        for (name, ch) in [
            ("power_min", &power_min),
            ("power_max", &power_max),
            ("power_std", &power_std),
            ("wind_speed", &wind_speed),
        ] {
            if let Some(ch) = ch {
                if ch.len() != n {
                    return Err(Error::InvalidArgument(format!(
                        "{name} has length {} but power_avg has {n}",
                        ch.len()
                    )));
                }
            }
        }
        for i in 0..n {
            let avg = power_avg[i];
            let lo = power_min.as_ref().and_then(|c| c[i]);
            let hi = power_max.as_ref().and_then(|c| c[i]);
            if let (Some(avg), Some(lo), Some(hi)) = (avg, lo, hi) {
                if !(lo <= avg && avg <= hi) {
                    return Err(Error::InvalidArgument(format!(
                        "slot {i}: expected min <= avg <= max, got {lo} / {avg} / {hi}"
                    )));
                }
            }
        }
        Ok(Self {
            turbine_id: turbine_id.into(),
            t0,
            power_avg,
            power_min,
            power_max,
            power_std,
            wind_speed,
        })
    }

    pub fn turbine_id(&self) -> &str {
        &self.turbine_id
    }

    pub fn t0(&self) -> DateTime<Utc> {
        self.t0
    }

    pub fn len(&self) -> usize {
        self.power_avg.len()
    }

    pub fn is_empty(&self) -> bool {
        self.power_avg.is_empty()
    }

    pub fn timestamp(&self, i: usize) -> DateTime<Utc> {
        self.t0 + Duration::seconds(STEP_SECONDS * i as i64)
    }

    pub fn power_avg(&self) -> &[Option<f64>] {
        &self.power_avg
    }

    pub fn power_min(&self) -> Option<&[Option<f64>]> {
        self.power_min.as_deref()
    }

    pub fn power_max(&self) -> Option<&[Option<f64>]> {
        self.power_max.as_deref()
    }

    pub fn power_std(&self) -> Option<&[Option<f64>]> {
        self.power_std.as_deref()
    }

    pub fn wind_speed(&self) -> Option<&[Option<f64>]> {
        self.wind_speed.as_deref()
    }

    /// Fraction of NA slots in the average power channel.
    pub fn na_fraction(&self) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        self.power_avg.iter().filter(|v| v.is_none()).count() as f64 / self.len() as f64
    }

    /// Set every power channel of slot `i` to NA. Wind speed is left untouched.
    pub(crate) fn invalidate_power(&mut self, i: usize) {
        self.power_avg[i] = None;
        for ch in [&mut self.power_min, &mut self.power_max, &mut self.power_std]
            .into_iter()
            .flatten()
        {
            ch[i] = None;
        }
    }
}

/// Result of [`standardize`]: `(Ξ − mean) / std` over the non-NA increments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardization {
    pub mean: f64,
    pub std: f64,
    pub values: Vec<Option<f64>>,
}

/// Power increments `P(t + dt) − P(t)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IncrementSeries {
    pub parent_id: String,
    /// Lag in 10-minute steps.
    pub lag_steps: usize,
    pub values: Vec<Option<f64>>,
    pub standardized: Option<Standardization>,
}

impl IncrementSeries {
    pub fn dt_seconds(&self) -> i64 {
        self.lag_steps as i64 * STEP_SECONDS
    }
}

/// Lagged differences of a sample sequence; NA if either end is NA.
pub fn lagged_differences(values: &[Option<f64>], lag: usize) -> Vec<Option<f64>> {
    if values.len() <= lag {
        return Vec::new();
    }
    values
        .iter()
        .zip(&values[lag..])
        .map(|(a, b)| match (a, b) {
            (Some(a), Some(b)) => Some(b - a),
            _ => None,
        })
        .collect()
}

/// Increments of the average power at lag `dt_seconds`.
pub fn increments(series: &TurbineSeries, dt_seconds: i64) -> Result<IncrementSeries> {
    if dt_seconds <= 0 || dt_seconds % STEP_SECONDS != 0 {
        return Err(Error::InvalidArgument(format!(
            "dt = {dt_seconds} s is not a positive multiple of {STEP_SECONDS} s"
        )));
    }
    if series.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "increments need at least 2 samples, got {}",
            series.len()
        )));
    }
    let lag = (dt_seconds / STEP_SECONDS) as usize;
    Ok(IncrementSeries {
        parent_id: series.turbine_id().to_owned(),
        lag_steps: lag,
        values: lagged_differences(series.power_avg(), lag),
        standardized: None,
    })
}

/// Standardize the increments with population (1/N) moments over non-NA entries.
pub fn standardize(inc: &IncrementSeries) -> Result<IncrementSeries> {
    let standardized = standardize_values(&inc.values)?;
    Ok(IncrementSeries {
        standardized: Some(standardized),
        ..inc.clone()
    })
}

pub fn standardize_values(values: &[Option<f64>]) -> Result<Standardization> {
    let present: Vec<f64> = values.iter().flatten().copied().collect();
    if present.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "standardization needs 2 non-NA values, got {}",
            present.len()
        )));
    }
    let (mean, std) = mean_std(&present);
    if std == 0.0 || !std.is_finite() {
        return Err(Error::DegenerateSeries("increments have zero spread".into()));
    }
    Ok(Standardization {
        mean,
        std,
        values: values.iter().map(|v| v.map(|x| (x - mean) / std)).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::TimeZone;
    use proptest::prelude::*;

    fn t0() -> DateTime<Utc> {
        Utc.with_ymd_and_hms(2014, 3, 1, 0, 0, 0).unwrap()
    }

    fn series(v: &[Option<f64>]) -> TurbineSeries {
        TurbineSeries::from_power("wt01", t0(), v.to_vec())
    }

    #[test]
    fn differencing() {
        let s = series(&[Some(0.0), Some(100.0), Some(3600.0)]);
        let inc = increments(&s, 600).unwrap();
        assert_eq!(inc.values, vec![Some(100.0), Some(3500.0)]);
        assert_eq!(inc.dt_seconds(), 600);
    }

    #[test]
    fn constant_has_zero_increments() {
        let s = series(&[Some(42.0); 5]);
        let inc = increments(&s, 600).unwrap();
        assert!(inc.values.iter().all(|v| *v == Some(0.0)));
    }

    #[test]
    fn na_propagates() {
        let s = series(&[Some(0.0), None, Some(200.0)]);
        let inc = increments(&s, 600).unwrap();
        assert_eq!(inc.values, vec![None, None]);
    }

    #[test]
    fn longer_lag() {
        let s = series(&[Some(0.0), Some(1.0), Some(4.0), Some(9.0)]);
        let inc = increments(&s, 1200).unwrap();
        assert_eq!(inc.values, vec![Some(4.0), Some(8.0)]);
    }

    #[test]
    fn bad_lag_and_short_series() {
        let s = series(&[Some(0.0), Some(1.0)]);
        assert!(matches!(increments(&s, 300), Err(Error::InvalidArgument(_))));
        assert!(matches!(increments(&s, 0), Err(Error::InvalidArgument(_))));
        let short = series(&[Some(1.0)]);
        assert!(matches!(increments(&short, 600), Err(Error::InsufficientData(_))));
    }

    #[test]
    fn standardize_examples() {
        let st = standardize_values(&[Some(-1.0), Some(1.0)]).unwrap();
        assert_eq!(st.values, vec![Some(-1.0), Some(1.0)]);

        let st = standardize_values(&[Some(2.0), Some(4.0), Some(6.0)]).unwrap();
        assert_eq!(st.mean, 4.0);
        assert!((st.std - (8.0f64 / 3.0).sqrt()).abs() < 1e-15);
        let z: Vec<f64> = st.values.iter().map(|v| v.unwrap()).collect();
        assert!((z[0] + 1.224_744_871_391_589).abs() < 1e-12);
        assert_eq!(z[1], 0.0);
        assert!((z[2] - 1.224_744_871_391_589).abs() < 1e-12);

        assert!(matches!(
            standardize_values(&[Some(3.0), Some(3.0), Some(3.0)]),
            Err(Error::DegenerateSeries(_))
        ));
        assert!(matches!(
            standardize_values(&[Some(3.0), None]),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn channel_checks() {
        let bad = TurbineSeries::new(
            "x",
            t0(),
            vec![Some(10.0)],
            Some(vec![Some(11.0)]),
            Some(vec![Some(12.0)]),
            None,
            None,
        );
        assert!(bad.is_err());
        let short = TurbineSeries::new("x", t0(), vec![Some(1.0), Some(2.0)], None, None, Some(vec![None]), None);
        assert!(short.is_err());
        assert_eq!(series(&[Some(1.0)]).timestamp(3), t0() + Duration::minutes(30));
    }

    fn sample() -> impl Strategy<Value = Option<f64>> {
        prop_oneof![1 => Just(None), 6 => (-4000.0f64..4000.0).prop_map(Some)]
    }

    proptest! {
        #[test]
        fn cumulative_sum_reconstructs_stretches(v in proptest::collection::vec(sample(), 2..200)) {
            let s = series(&v);
            let inc = increments(&s, 600).unwrap();
            // Walk each NA-free stretch from its first value.
            let mut cur: Option<f64> = v[0];
            for i in 0..inc.values.len() {
                cur = match (cur, inc.values[i]) {
                    (Some(c), Some(d)) => Some(c + d),
                    _ => v[i + 1],
                };
                if let (Some(c), Some(orig)) = (cur, v[i + 1]) {
                    prop_assert!((c - orig).abs() <= 1e-9 * (1.0 + orig.abs()) * (i as f64 + 1.0));
                }
            }
        }

        #[test]
        fn standardize_is_idempotent(v in proptest::collection::vec(-1000.0f64..1000.0, 3..300)) {
            let vals: Vec<Option<f64>> = v.iter().map(|&x| Some(x)).collect();
            if let Ok(once) = standardize_values(&vals) {
                let twice = standardize_values(&once.values).unwrap();
                for (a, b) in once.values.iter().zip(&twice.values) {
                    prop_assert!((a.unwrap() - b.unwrap()).abs() < 1e-9);
                }
                let z: Vec<f64> = once.values.iter().flatten().copied().collect();
                let (m, s) = mean_std(&z);
                prop_assert!(m.abs() < 1e-9);
                prop_assert!((s - 1.0).abs() < 1e-9);
            }
        }
    }
}
