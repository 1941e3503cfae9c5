//! Mid-term quasi-periodicity analysis of hemispheric sunspot areas.
//!
//! The pipeline bins daily areas into Carrington rotations, extracts
//! fluctuations around a 13-rotation running mean, stabilizes their
//! variance with a fitted power law of the smoothed activity, splits the
//! record into high- and low-activity periods and solar cycles, and looks
//! for the ~10-rotation periodicity with autocorrelation functions and
//! Morlet wavelet spectra tested against red noise.

pub mod acfspec;
pub mod error;
pub mod ingest;
pub mod pipeline;
pub mod segment;
pub mod stabilize;
pub mod synth;
pub mod timeseries;
pub mod waveletspec;

pub use error::{Error, Result};
