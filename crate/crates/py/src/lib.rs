//! Python bindings. Structured results come back as plain dicts and lists.

use std::path::PathBuf;

use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyValueError};
use pyo3::prelude::*;
use serde::Serialize;

use windscale_core as ws;
use ws::analysis::{self, ComparisonOptions};
use ws::calibration::{CalibrationConfig, CalibrationMode};
use ws::cleansing::CleansingConfig;
use ws::fgn::{FgnSpec, Method};
use ws::io::{format_timestamp, parse_timestamp};

create_exception!(windscale_py, WindscaleError, PyException, "Numerical or data failure inside windscale.");

fn err(e: ws::Error) -> PyErr {
    match e {
        ws::Error::InvalidArgument(_) => PyValueError::new_err(e.to_string()),
        _ => WindscaleError::new_err(e.to_string()),
    }
}

fn to_py<T: Serialize>(py: Python<'_>, v: &T) -> PyResult<Py<PyAny>> {
    let text = serde_json::to_string(v).map_err(|e| WindscaleError::new_err(e.to_string()))?;
    Ok(py.import("json")?.call_method1("loads", (text,))?.unbind())
}

fn method(name: &str) -> PyResult<Method> {
    match name {
        "circulant" => Ok(Method::Circulant),
        "durbin_levinson" | "dl" => Ok(Method::DurbinLevinson),
        _ => Err(PyValueError::new_err(format!("unknown method {name:?}; use 'circulant' or 'durbin_levinson'"))),
    }
}

/// A 10-minute power series with NA slots as `None`.
#[pyclass(name = "TurbineSeries", module = "windscale_py", from_py_object)]
#[derive(Clone)]
struct PyTurbineSeries {
    inner: ws::TurbineSeries,
}

#[pymethods]
impl PyTurbineSeries {
    #[new]
    #[pyo3(signature = (turbine_id, t0, power_avg, power_min=None, power_max=None, power_std=None, wind_speed=None))]
    fn new(
        turbine_id: String,
        t0: &str,
        power_avg: Vec<Option<f64>>,
        power_min: Option<Vec<Option<f64>>>,
        power_max: Option<Vec<Option<f64>>>,
        power_std: Option<Vec<Option<f64>>>,
        wind_speed: Option<Vec<Option<f64>>>,
    ) -> PyResult<Self> {
        let t0 = parse_timestamp(t0).ok_or_else(|| PyValueError::new_err(format!("bad timestamp {t0:?}")))?;
        let inner = ws::TurbineSeries::new(turbine_id, t0, power_avg, power_min, power_max, power_std, wind_speed).map_err(err)?;
        Ok(Self { inner })
    }

    #[getter]
    fn turbine_id(&self) -> &str {
        self.inner.turbine_id()
    }

    #[getter]
    fn t0(&self) -> String {
        format_timestamp(self.inner.t0())
    }

    #[getter]
    fn power_avg(&self) -> Vec<Option<f64>> {
        self.inner.power_avg().to_vec()
    }

    #[getter]
    fn power_min(&self) -> Option<Vec<Option<f64>>> {
        self.inner.power_min().map(<[_]>::to_vec)
    }

    #[getter]
    fn power_max(&self) -> Option<Vec<Option<f64>>> {
        self.inner.power_max().map(<[_]>::to_vec)
    }

    #[getter]
    fn power_std(&self) -> Option<Vec<Option<f64>>> {
        self.inner.power_std().map(<[_]>::to_vec)
    }

    #[getter]
    fn wind_speed(&self) -> Option<Vec<Option<f64>>> {
        self.inner.wind_speed().map(<[_]>::to_vec)
    }

    fn na_fraction(&self) -> f64 {
        self.inner.na_fraction()
    }

    /// One-step increments `P(t+1) - P(t)`.
    fn increments(&self) -> PyResult<Vec<Option<f64>>> {
        Ok(ws::series::increments(&self.inner, ws::STEP_SECONDS).map_err(err)?.values)
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __eq__(&self, other: &Self) -> bool {
        self.inner == other.inner
    }

    fn __repr__(&self) -> String {
        format!("TurbineSeries({:?}, t0={}, len={})", self.inner.turbine_id(), self.t0(), self.inner.len())
    }
}

/// Parameters of the bistable power model.
#[pyclass(name = "ModelParams", module = "windscale_py", from_py_object)]
#[derive(Clone)]
struct PyModelParams {
    inner: ws::model::ModelParams,
}

#[pymethods]
impl PyModelParams {
    /// Preset parameters for H in {0.5, 0.7, 0.9}.
    #[staticmethod]
    #[pyo3(signature = (hurst, seed=0))]
    fn preset(hurst: f64, seed: u64) -> PyResult<Self> {
        Ok(Self { inner: ws::model::ModelParams::table1(hurst).map_err(err)?.with_seed(seed) })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let inner: ws::model::ModelParams = serde_json::from_str(text).map_err(|e| PyValueError::new_err(e.to_string()))?;
        inner.validate().map_err(err)?;
        Ok(Self { inner })
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.inner).map_err(|e| WindscaleError::new_err(e.to_string()))
    }

    /// Copy with some fields replaced, e.g. `p.replace(a=1300.0, seed=4)`.
    #[pyo3(signature = (**changes))]
    fn replace(&self, py: Python<'_>, changes: Option<&Bound<'_, pyo3::types::PyDict>>) -> PyResult<Self> {
        let mut v = serde_json::to_value(&self.inner).map_err(|e| WindscaleError::new_err(e.to_string()))?;
        if let Some(changes) = changes {
            let text: String = py.import("json")?.call_method1("dumps", (changes,))?.extract()?;
            let patch: serde_json::Value = serde_json::from_str(&text).map_err(|e| PyValueError::new_err(e.to_string()))?;
            for (k, val) in patch.as_object().into_iter().flatten() {
                if v.get(k).is_none() {
                    return Err(PyValueError::new_err(format!("unknown parameter {k:?}")));
                }
                v[k] = val.clone();
            }
        }
        let inner: ws::model::ModelParams = serde_json::from_value(v).map_err(|e| PyValueError::new_err(e.to_string()))?;
        inner.validate().map_err(err)?;
        Ok(Self { inner })
    }

    #[getter]
    fn hurst(&self) -> f64 {
        self.inner.hurst
    }
    #[getter]
    fn a(&self) -> f64 {
        self.inner.a
    }
    #[getter]
    fn d(&self) -> f64 {
        self.inner.d
    }
    #[getter]
    fn amp(&self) -> f64 {
        self.inner.amp
    }
    #[getter]
    fn p0(&self) -> f64 {
        self.inner.p0
    }
    #[getter]
    fn omega(&self) -> f64 {
        self.inner.omega
    }
    #[getter]
    fn seed(&self) -> u64 {
        self.inner.seed
    }

    fn __repr__(&self) -> String {
        let p = &self.inner;
        format!("ModelParams(hurst={}, a={}, d={}, amp={}, seed={})", p.hurst, p.a, p.d, p.amp, p.seed)
    }
}

/// Read a CSV in the ingestion schema into `{turbine_id: TurbineSeries}`.
#[pyfunction]
fn read_csv(path: PathBuf) -> PyResult<std::collections::BTreeMap<String, PyTurbineSeries>> {
    let got = ws::io::ingest(&path).map_err(err)?;
    Ok(got.series.into_iter().map(|(k, inner)| (k, PyTurbineSeries { inner })).collect())
}

#[pyfunction]
fn write_csv(path: PathBuf, series: Vec<PyTurbineSeries>) -> PyResult<()> {
    ws::io::export(&path, series.iter().map(|s| &s.inner)).map_err(err)
}

/// Returns `(cleaned_series, report_dict)`.
#[pyfunction]
#[pyo3(signature = (series, xi0=0.67, q=0.99, rated_power=3600.0, precision_digits=5))]
fn cleanse(
    py: Python<'_>,
    series: &PyTurbineSeries,
    xi0: f64,
    q: f64,
    rated_power: f64,
    precision_digits: u32,
) -> PyResult<(PyTurbineSeries, Py<PyAny>)> {
    let cfg = CleansingConfig { xi0, q, rated_power, precision_digits };
    let (inner, report) = ws::cleansing::cleanse(&series.inner, &cfg).map_err(err)?;
    Ok((PyTurbineSeries { inner }, to_py(py, &report)?))
}

#[pyfunction]
#[pyo3(signature = (values, n_bins=100))]
fn pdf_histogram(py: Python<'_>, values: Vec<Option<f64>>, n_bins: usize) -> PyResult<Py<PyAny>> {
    to_py(py, &analysis::pdf_histogram(&values, n_bins).map_err(err)?)
}

/// Lagged autocorrelation, with a shuffle-surrogate band when `n_shuffles > 0`.
#[pyfunction]
#[pyo3(signature = (values, max_lag, n_shuffles=0, seed=0))]
fn acf(py: Python<'_>, values: Vec<Option<f64>>, max_lag: usize, n_shuffles: usize, seed: u64) -> PyResult<Py<PyAny>> {
    let curve = if n_shuffles > 0 {
        analysis::acf_with_band(&values, max_lag, n_shuffles, seed)
    } else {
        analysis::acf(&values, max_lag)
    };
    to_py(py, &curve.map_err(err)?)
}

#[pyfunction]
#[pyo3(signature = (values, n_segments, fit_lo, fit_hi))]
fn spectrum(py: Python<'_>, values: Vec<Option<f64>>, n_segments: usize, fit_lo: f64, fit_hi: f64) -> PyResult<Py<PyAny>> {
    to_py(py, &analysis::spectrum(&values, n_segments, (fit_lo, fit_hi)).map_err(err)?)
}

#[pyfunction]
fn moments(py: Python<'_>, values: Vec<Option<f64>>) -> PyResult<Py<PyAny>> {
    to_py(py, &analysis::moments(&values).map_err(err)?)
}

#[pyfunction]
#[pyo3(signature = (a, b, n_quantiles=100))]
fn qq_pairs(a: Vec<Option<f64>>, b: Vec<Option<f64>>, n_quantiles: usize) -> PyResult<Vec<(f64, f64)>> {
    analysis::qq_pairs(&a, &b, n_quantiles).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (real, sim, max_lag=1008))]
fn compare(py: Python<'_>, real: Vec<Option<f64>>, sim: Vec<Option<f64>>, max_lag: usize) -> PyResult<Py<PyAny>> {
    let opts = ComparisonOptions { max_lag, ..Default::default() };
    to_py(py, &analysis::compare_series(&real, &sim, &opts).map_err(err)?)
}

/// Fluctuation function and scaling fit. Returns `{"curve": ..., "fit": ...}`.
#[pyfunction]
#[pyo3(signature = (values, scales=None, order=2, crossover=true))]
fn dfa(py: Python<'_>, values: Vec<Option<f64>>, scales: Option<Vec<usize>>, order: usize, crossover: bool) -> PyResult<Py<PyAny>> {
    let scales = scales.unwrap_or_else(|| ws::dfa::default_scales(values.len()));
    let curve = ws::dfa::fluctuation(&values, &scales, order).map_err(err)?;
    let fit = if crossover { ws::dfa::fit_crossover(&curve) } else { ws::dfa::fit_alpha_all(&curve) }.map_err(err)?;
    to_py(py, &serde_json::json!({ "curve": curve, "fit": fit }))
}

#[pyfunction]
#[pyo3(signature = (hurst, n, seed, method="circulant"))]
fn fgn(hurst: f64, n: usize, seed: u64, method: &str) -> PyResult<Vec<f64>> {
    let spec = FgnSpec::new(hurst, n, seed, self::method(method)?).map_err(err)?;
    ws::fgn::sample(&spec).map_err(err)
}

/// Clipped model output of `n_steps` samples.
#[pyfunction]
fn simulate(params: &PyModelParams, n_steps: usize) -> PyResult<Vec<f64>> {
    Ok(ws::model::simulate(&params.inner, n_steps).map_err(err)?.clipped)
}

/// Returns `(ModelParams, result_dict)`.
#[pyfunction]
#[pyo3(signature = (series, hurst=0.9, seed=0, replicas=10, per_month=false))]
fn calibrate(
    py: Python<'_>,
    series: &PyTurbineSeries,
    hurst: f64,
    seed: u64,
    replicas: usize,
    per_month: bool,
) -> PyResult<(PyModelParams, Py<PyAny>)> {
    let cfg = CalibrationConfig {
        hurst,
        seed,
        replicas,
        mode: if per_month { CalibrationMode::PerMonth } else { CalibrationMode::Pooled },
        ..Default::default()
    };
    let res = ws::calibration::calibrate(&series.inner, &cfg).map_err(err)?;
    let params = res.to_model_params(series.inner.t0(), seed, cfg.p_minus, cfg.p_plus);
    Ok((PyModelParams { inner: params }, to_py(py, &res)?))
}

#[pymodule]
fn windscale_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyTurbineSeries>()?;
    m.add_class::<PyModelParams>()?;
    m.add("WindscaleError", m.py().get_type::<WindscaleError>())?;
    m.add("STEP_SECONDS", ws::STEP_SECONDS)?;
    for f in [
        wrap_pyfunction!(read_csv, m)?,
        wrap_pyfunction!(write_csv, m)?,
        wrap_pyfunction!(cleanse, m)?,
        wrap_pyfunction!(pdf_histogram, m)?,
        wrap_pyfunction!(acf, m)?,
        wrap_pyfunction!(spectrum, m)?,
        wrap_pyfunction!(moments, m)?,
        wrap_pyfunction!(qq_pairs, m)?,
        wrap_pyfunction!(compare, m)?,
        wrap_pyfunction!(dfa, m)?,
        wrap_pyfunction!(fgn, m)?,
        wrap_pyfunction!(simulate, m)?,
        wrap_pyfunction!(calibrate, m)?,
    ] {
        m.add_function(f)?;
    }
    Ok(())
}
