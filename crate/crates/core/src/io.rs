//! CSV ingestion/export, JSON reports with provenance, and run configuration.

use std::collections::BTreeMap;
use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use chrono::{DateTime, NaiveDateTime, SecondsFormat, Utc};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::cleansing::CleansingConfig;
use crate::model::ModelParams;
use crate::series::{TurbineSeries, STEP_SECONDS};
use crate::{Error, Result};

/// Version stamped into every JSON report.
pub const SCHEMA_VERSION: u32 = 1;

pub const COL_TIMESTAMP: &str = "timestamp";
pub const COL_TURBINE: &str = "turbine_id";
pub const COL_AVG: &str = "power_avg_kw";
pub const COL_MIN: &str = "power_min_kw";
pub const COL_MAX: &str = "power_max_kw";
pub const COL_STD: &str = "power_std_kw";
pub const COL_WIND: &str = "wind_speed_ms";

const OPTIONAL: [&str; 4] = [COL_MIN, COL_MAX, COL_STD, COL_WIND];

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestStats {
    pub rows_parsed: usize,
    /// Malformed rows abort ingestion, so this stays zero on success.
    pub rows_rejected: usize,
    /// Grid slots with no row, filled with NA.
    pub slots_filled: usize,
}

#[derive(Debug, Clone)]
pub struct Ingested {
    pub series: BTreeMap<String, TurbineSeries>,
    pub stats: IngestStats,
}

/// Parse an ISO-8601 timestamp. Offsets are converted to UTC; naive times are UTC.
pub fn parse_timestamp(s: &str) -> Option<DateTime<Utc>> {
    let s = s.trim();
    if let Ok(t) = DateTime::parse_from_rfc3339(s) {
        return Some(t.with_timezone(&Utc));
    }
    ["%Y-%m-%dT%H:%M:%S", "%Y-%m-%d %H:%M:%S", "%Y-%m-%dT%H:%M", "%Y-%m-%d %H:%M"]
        .iter()
        .find_map(|f| NaiveDateTime::parse_from_str(s, f).ok())
        .map(|t| t.and_utc())
}

pub fn format_timestamp(t: DateTime<Utc>) -> String {
    t.to_rfc3339_opts(SecondsFormat::Secs, true)
}

fn parse_value(raw: &str, col: &str, line: u64) -> Result<Option<f64>> {
    let raw = raw.trim();
    if raw == "NA" {
        return Ok(None);
    }
    match raw.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(Some(v)),
        _ => Err(Error::Ingest { line, message: format!("{col}: expected a number or NA, got {raw:?}") }),
    }
}

struct Row {
    line: u64,
    t: DateTime<Utc>,
    values: [Option<f64>; 5],
}

/// Read every turbine from CSV text. A header row is required.
pub fn ingest_reader<R: Read>(reader: R) -> Result<Ingested> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let find = |name: &str| headers.iter().position(|h| h == name);
    let need = |name: &str| find(name).ok_or_else(|| Error::Ingest { line: 1, message: format!("missing column {name}") });
    let (i_ts, i_id, i_avg) = (need(COL_TIMESTAMP)?, need(COL_TURBINE)?, need(COL_AVG)?);
    let i_opt: Vec<Option<usize>> = OPTIONAL.iter().map(|c| find(c)).collect();

    let mut rows: BTreeMap<String, Vec<Row>> = BTreeMap::new();
    let mut stats = IngestStats::default();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        let field = |i: usize| {
            rec.get(i).ok_or_else(|| Error::Ingest { line, message: format!("row has {} fields", rec.len()) })
        };
        let ts = field(i_ts)?;
        let t = parse_timestamp(ts).ok_or_else(|| Error::Ingest { line, message: format!("bad timestamp {ts:?}") })?;
        let id = field(i_id)?.to_string();
        if id.is_empty() {
            return Err(Error::Ingest { line, message: "empty turbine_id".into() });
        }
        let mut values = [parse_value(field(i_avg)?, COL_AVG, line)?, None, None, None, None];
        for (k, idx) in i_opt.iter().enumerate() {
            if let Some(i) = idx {
                values[k + 1] = parse_value(field(*i)?, OPTIONAL[k], line)?;
            }
        }
        if let [Some(avg), Some(lo), Some(hi), ..] = values {
            if !(lo <= avg && avg <= hi) {
                return Err(Error::Ingest { line, message: format!("expected min <= avg <= max, got {lo} / {avg} / {hi}") });
            }
        }
        rows.entry(id).or_default().push(Row { line, t, values });
        stats.rows_parsed += 1;
    }

    let mut series = BTreeMap::new();
    for (id, mut rs) in rows {
        rs.sort_by_key(|r| (r.t, r.line));
        for w in rs.windows(2) {
            if w[0].t == w[1].t {
                let (first, second) = (w[0].line.min(w[1].line), w[0].line.max(w[1].line));
                return Err(Error::DuplicateTimestamp { turbine: id, first, second });
            }
        }
        let t0 = rs[0].t;
        let span = (rs[rs.len() - 1].t - t0).num_seconds();
        let n = (span / STEP_SECONDS) as usize + 1;
        let mut channels = vec![vec![None; n]; 5];
        for r in &rs {
            let off = (r.t - t0).num_seconds();
            if off % STEP_SECONDS != 0 {
                return Err(Error::Ingest {
                    line: r.line,
                    message: format!("timestamp {} is off the {STEP_SECONDS} s grid starting {}", format_timestamp(r.t), format_timestamp(t0)),
                });
            }
            let i = (off / STEP_SECONDS) as usize;
            for (c, v) in channels.iter_mut().zip(r.values) {
                c[i] = v;
            }
        }
        stats.slots_filled += n - rs.len();
        let mut it = channels.into_iter();
        let avg = it.next().unwrap_or_default();
        let mut opt = i_opt.iter().zip(it).map(|(idx, c)| idx.map(|_| c));
        let mut next = || opt.next().flatten();
        let (lo, hi, sd, wind) = (next(), next(), next(), next());
        series.insert(id.clone(), TurbineSeries::new(id, t0, avg, lo, hi, sd, wind)?);
    }
    Ok(Ingested { series, stats })
}

pub fn ingest(path: &Path) -> Result<Ingested> {
    ingest_reader(fs::File::open(path)?)
}

fn fmt_value(v: Option<f64>) -> String {
    // `{}` prints the shortest representation that parses back to the same f64.
    v.map_or_else(|| "NA".to_string(), |x| format!("{x}"))
}

/// Write series in the ingestion schema. Optional columns appear when any series
/// carries them; series lacking such a channel emit NA there.
pub fn export_writer<'a, W: Write>(writer: W, series: impl IntoIterator<Item = &'a TurbineSeries>) -> Result<()> {
    let series: Vec<&TurbineSeries> = series.into_iter().collect();
    let channels = |s: &'a TurbineSeries| [s.power_min(), s.power_max(), s.power_std(), s.wind_speed()];
    let present: Vec<bool> = (0..4).map(|k| series.iter().any(|s| channels(s)[k].is_some())).collect();
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec![COL_TIMESTAMP, COL_TURBINE, COL_AVG];
    header.extend(OPTIONAL.iter().zip(&present).filter(|(_, &p)| p).map(|(c, _)| *c));
    w.write_record(&header)?;
    for s in series {
        let ch = channels(s);
        for i in 0..s.len() {
            let mut rec = vec![format_timestamp(s.timestamp(i)), s.turbine_id().to_string(), fmt_value(s.power_avg()[i])];
            for k in (0..4).filter(|&k| present[k]) {
                rec.push(fmt_value(ch[k].and_then(|c| c[i])));
            }
            w.write_record(&rec)?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn export_to_string<'a>(series: impl IntoIterator<Item = &'a TurbineSeries>) -> Result<String> {
    let mut buf = Vec::new();
    export_writer(&mut buf, series)?;
    String::from_utf8(buf).map_err(|e| Error::InvalidArgument(e.to_string()))
}

pub fn export<'a>(path: &Path, series: impl IntoIterator<Item = &'a TurbineSeries>) -> Result<()> {
    write_atomic(path, export_to_string(series)?.as_bytes())
}

/// Write to a sibling temporary file, then rename over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path.file_name().ok_or_else(|| Error::InvalidArgument(format!("not a file path: {}", path.display())))?;
    let tmp = dir.join(format!(".{}.{}.tmp", name.to_string_lossy(), std::process::id()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path).inspect_err(|_| {
        let _ = fs::remove_file(&tmp);
    })?;
    Ok(())
}

/// SHA-256 of the canonical JSON form of a configuration.
pub fn config_hash<T: Serialize>(config: &T) -> Result<String> {
    let bytes = serde_json::to_vec(config)?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

/// JSON report with provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report<T> {
    pub schema_version: u32,
    pub kind: String,
    pub config_hash: String,
    pub seed: Option<u64>,
    pub body: T,
}

impl<T: Serialize> Report<T> {
    pub fn new<C: Serialize>(kind: &str, config: &C, seed: Option<u64>, body: T) -> Result<Self> {
        Ok(Self { schema_version: SCHEMA_VERSION, kind: kind.to_string(), config_hash: config_hash(config)?, seed, body })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.to_json()?.as_bytes())
    }
}

/// Write rows of numbers (NA for `None`) under `header`.
pub fn write_table(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<Option<f64>>>) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(r.into_iter().map(fmt_value))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    write_atomic(path, &bytes)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AnalysisOptions {
    /// Maximum ACF lag in steps (one week).
    pub max_lag: usize,
    pub n_bins: usize,
    pub n_segments: usize,
    pub n_shuffles: usize,
    /// Spectrum fit range in Hz; the full support when absent.
    pub fit_range: Option<(f64, f64)>,
    pub n_quantiles: usize,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        Self { max_lag: 1008, n_bins: 100, n_segments: 10, n_shuffles: 20, fit_range: None, n_quantiles: 200 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DfaOptions {
    /// Explicit scales; a log-spaced default grid when absent.
    pub scales: Option<Vec<usize>>,
    pub order: usize,
    /// Fit range in steps; all scales when absent.
    pub fit_range: Option<(usize, usize)>,
    pub detect_crossover: bool,
}

impl Default for DfaOptions {
    fn default() -> Self {
        Self { scales: None, order: 2, fit_range: None, detect_crossover: true }
    }
}

/// Everything a pipeline run depends on. Flags on the command line override fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct RunConfig {
    pub inputs: Vec<PathBuf>,
    pub cleansing: CleansingConfig,
    pub analysis: AnalysisOptions,
    pub dfa: DfaOptions,
    pub model: Option<ModelParams>,
    pub calibration_profile: Option<PathBuf>,
    pub seed: Option<u64>,
    pub output_dir: Option<PathBuf>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let cfg: Self = serde_json::from_str(&fs::read_to_string(path)?)?;
        let base = path.parent().unwrap_or(Path::new("."));
        Ok(cfg.resolve_relative(base))
    }

    fn resolve_relative(mut self, base: &Path) -> Self {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        self.inputs.iter_mut().for_each(fix);
        self.calibration_profile.iter_mut().for_each(fix);
        self.output_dir.iter_mut().for_each(fix);
        self
    }

    /// Checks that inputs exist and that a seed is present when `stochastic`.
    pub fn check(&self, stochastic: bool) -> Result<()> {
        if let Some(p) = self.inputs.iter().chain(&self.calibration_profile).find(|p| !p.exists()) {
            return Err(Error::InvalidArgument(format!("path not found: {}", p.display())));
        }
        if stochastic && self.seed.is_none() {
            return Err(Error::InvalidArgument("a seed is required for stochastic commands".into()));
        }
        self.cleansing.validate()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::TimeZone;
    use proptest::prelude::*;

    const HEAD: &str = "timestamp,turbine_id,power_avg_kw\n";

    #[test]
    fn three_rows() {
        let csv = format!("{HEAD}2014-03-01T00:00:00Z,T1,10\n2014-03-01T00:10:00Z,T1,20\n2014-03-01T00:20:00Z,T1,30\n");
        let out = ingest_reader(csv.as_bytes()).unwrap();
        let s = &out.series["T1"];
        assert_eq!(s.len(), 3);
        assert_eq!(s.power_avg(), &[Some(10.0), Some(20.0), Some(30.0)]);
        assert!(s.power_min().is_none() && s.wind_speed().is_none());
        assert_eq!(out.stats.rows_parsed, 3);
    }

    #[test]
    fn na_literal_and_gap() {
        let csv = format!("{HEAD}2014-03-01T00:00:00Z,T1,NA\n2014-03-01T00:30:00Z,T1,5\n");
        let out = ingest_reader(csv.as_bytes()).unwrap();
        assert_eq!(out.series["T1"].power_avg(), &[None, None, None, Some(5.0)]);
        assert_eq!(out.stats.slots_filled, 2);
    }

    #[test]
    fn unsorted_and_multiple_turbines() {
        let csv = format!("{HEAD}2014-03-01T00:10:00Z,B,2\n2014-03-01T00:00:00Z,A,1\n2014-03-01T00:00:00Z,B,1\n");
        let out = ingest_reader(csv.as_bytes()).unwrap();
        assert_eq!(out.series.keys().collect::<Vec<_>>(), vec!["A", "B"]);
        assert_eq!(out.series["B"].power_avg(), &[Some(1.0), Some(2.0)]);
        // 01:00+01:00 is 00:00 UTC, so it collides with line 3.
        let err = ingest_reader(format!("{csv}2014-03-01T01:00:00+01:00,A,3\n").as_bytes());
        assert!(matches!(err, Err(Error::DuplicateTimestamp { ref turbine, first: 3, second: 5 }) if turbine == "A"), "{err:?}");
    }

    #[test]
    fn duplicate_names_both_lines() {
        let csv = format!("{HEAD}2014-03-01T00:00:00Z,T1,1\n2014-03-01T00:10:00Z,T1,2\n2014-03-01T00:00:00Z,T1,3\n");
        match ingest_reader(csv.as_bytes()) {
            Err(e @ Error::DuplicateTimestamp { first: 2, second: 4, .. }) => {
                assert!(e.to_string().contains("lines 2 and 4"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn malformed_rows_report_line() {
        for (row, needle) in [
            ("2014-03-01T00:10:00Z,T1,abc", "power_avg_kw"),
            ("yesterday,T1,1", "timestamp"),
            ("2014-03-01T00:10:00Z,T1,inf", "power_avg_kw"),
            ("2014-03-01T00:05:00Z,T1,1", "grid"),
        ] {
            let csv = format!("{HEAD}2014-03-01T00:00:00Z,T1,1\n{row}\n");
            match ingest_reader(csv.as_bytes()) {
                Err(e @ Error::Ingest { line: 3, .. }) => assert!(e.to_string().contains(needle), "{e}"),
                other => panic!("{row}: {other:?}"),
            }
        }
        let err = ingest_reader("timestamp,power_avg_kw\n".as_bytes()).unwrap_err();
        assert!(err.to_string().contains("turbine_id"));
    }

    #[test]
    fn min_max_order_checked() {
        let csv = "timestamp,turbine_id,power_avg_kw,power_min_kw,power_max_kw\n2014-03-01T00:00:00Z,T,5,6,7\n";
        assert!(matches!(ingest_reader(csv.as_bytes()), Err(Error::Ingest { line: 2, .. })));
    }

    #[test]
    fn all_channels_round_trip() {
        let t0 = Utc.with_ymd_and_hms(2014, 3, 1, 0, 0, 0).unwrap();
        let s = TurbineSeries::new(
            "WT 1",
            t0,
            vec![Some(0.1), None, Some(3600.0)],
            Some(vec![Some(0.0), None, Some(3599.5)]),
            Some(vec![Some(0.2), Some(1.0), Some(3600.0)]),
            Some(vec![Some(0.05), None, None]),
            Some(vec![Some(3.3), Some(1e-300), None]),
        )
        .unwrap();
        let text = export_to_string([&s]).unwrap();
        let back = ingest_reader(text.as_bytes()).unwrap();
        assert_eq!(back.series["WT 1"], s);
    }

    #[test]
    fn report_envelope() {
        let r = Report::new("test", &CleansingConfig::default(), Some(7), vec![1, 2]).unwrap();
        let v: serde_json::Value = serde_json::from_str(&r.to_json().unwrap()).unwrap();
        assert_eq!(v["schema_version"], SCHEMA_VERSION);
        assert_eq!(v["seed"], 7);
        assert_eq!(v["config_hash"].as_str().unwrap().len(), 64);
        let other = CleansingConfig { q: 0.98, ..Default::default() };
        assert_ne!(config_hash(&other).unwrap(), r.config_hash);
    }

    #[test]
    fn atomic_write_replaces() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("out.json");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(fs::read_to_string(&p).unwrap(), "two");
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);
    }

    #[test]
    fn run_config_defaults_and_checks() {
        let cfg: RunConfig = serde_json::from_str("{}").unwrap();
        assert_eq!(cfg.analysis.max_lag, 1008);
        assert_eq!(cfg.analysis.n_segments, 10);
        assert_eq!(cfg.dfa.order, 2);
        assert!(cfg.check(false).is_ok());
        assert!(cfg.check(true).is_err());
        let missing = RunConfig { inputs: vec!["/nonexistent/x.csv".into()], ..Default::default() };
        assert!(missing.check(false).is_err());
    }

    fn arb_value() -> impl Strategy<Value = Option<f64>> {
        prop_oneof![1 => Just(None), 4 => (-1e6f64..1e6).prop_map(Some), 1 => any::<f64>().prop_filter("finite", |v| v.is_finite()).prop_map(Some)]
    }

    proptest! {
        #[test]
        fn export_ingest_is_identity(
            avg in prop::collection::vec(arb_value(), 1..60),
            start in 0i64..100_000,
            wind in any::<bool>(),
        ) {
            let t0 = Utc.timestamp_opt(1_393_632_000 + start * STEP_SECONDS, 0).unwrap();
            let w = wind.then(|| avg.iter().map(|v| v.map(|x| x.abs() / 1e3)).collect());
            let s = TurbineSeries::new("T", t0, avg, None, None, None, w).unwrap();
            let back = ingest_reader(export_to_string([&s]).unwrap().as_bytes()).unwrap();
            prop_assert_eq!(&back.series["T"], &s);
        }
    }
}
