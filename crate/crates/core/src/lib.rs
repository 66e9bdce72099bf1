//! Characterization and stochastic modelling of 10-minute wind-turbine power series.
//!
//! The crate is organised along the processing chain:
//!
//! - [`series`]: the [`TurbineSeries`] container with explicit NA slots, increments and
//!   standardization.
//! - [`cleansing`]: rule-based flagging of implausible SCADA values.
//! - [`analysis`]: histograms, lagged autocorrelation with shuffle-surrogate bands,
//!   segment-averaged spectra, increment moments and QQ pairs.
//! - [`dfa`]: detrended fluctuation analysis with single-slope and crossover fits.
//! - [`fgn`]: exact fractional Gaussian noise samplers (Durbin–Levinson, circulant embedding).
//! - [`model`]: the bistable power model driven by fractional noise, with curtailment clipping.
//! - [`calibration`]: parameter estimation and simulation-matching optimizers.
//! - [`io`]: CSV ingestion/export and JSON reports.
//!
//! Missing values are represented as `None` throughout (`Option<f64>` samples).

pub mod analysis;
pub mod calibration;
pub mod cleansing;
pub mod dfa;
pub mod error;
pub mod fgn;
pub mod io;
pub mod model;
pub mod rng;
pub mod series;
pub mod stats;

pub use error::{Error, Result};
pub use series::{IncrementSeries, TurbineSeries, STEP_SECONDS};
