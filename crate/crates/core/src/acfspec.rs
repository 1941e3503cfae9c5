//! Autocorrelation analysis: the biased sample ACF, white-noise standard
//! error bounds, peak classification inside a lag band, and comparisons
//! between ACFs of related series.
//!
//! Missing values (`NaN`) are excluded: leading and trailing gaps are
//! trimmed, interior gaps contribute no lagged products. `M` counts the
//! valid samples and sets the `1/√M` bound.

use std::fmt::Write as _;
use std::ops::RangeInclusive;

use num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::timeseries::RotationSeries;

/// Default largest lag, in rotations.
pub const DEFAULT_MAX_LAG: usize = 40;

/// Lag band holding the ~10-rotation periodicity.
pub const PERIOD_BAND: RangeInclusive<usize> = 7..=13;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcfResult {
    pub series_id: String,
    /// `c[τ]` for `τ = 0..=max_lag`.
    pub c: Vec<f64>,
    pub n_effective: usize,
    pub sigma_bound: f64,
}

impl AcfResult {
    pub fn max_lag(&self) -> usize {
        self.c.len() - 1
    }

    pub fn lags(&self) -> RangeInclusive<usize> {
        0..=self.max_lag()
    }

    pub fn one_sigma(&self) -> f64 {
        self.sigma_bound
    }

    pub fn two_sigma(&self) -> f64 {
        2.0 * self.sigma_bound
    }

    /// Largest `c_τ` over `range` (clipped to computed lags); first lag wins ties.
    pub fn global_max(&self, lo: usize, hi: usize) -> Option<(usize, f64)> {
        let hi = hi.min(self.max_lag());
        (lo..=hi)
            .map(|t| (t, self.c[t]))
            .fold(None, |best, (t, v)| match best {
                Some((_, bv)) if bv >= v => best,
                _ => Some((t, v)),
            })
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("lag,c,one_sigma,two_sigma\n");
        for (lag, c) in self.c.iter().enumerate() {
            let _ = writeln!(s, "{lag},{c},{},{}", self.one_sigma(), self.two_sigma());
        }
        s
    }
}

/// `(1/√M, 2/√M)`.
pub fn acf_bounds(m: usize) -> (f64, f64) {
    assert!(m >= 2, "ACF bounds need M >= 2, got {m}");
    let one = 1.0 / (m as f64).sqrt();
    (one, 2.0 * one)
}

/// Valid interior (trimmed of leading/trailing NaN), centered, with interior
/// NaN replaced by zero. Returns the centered values and M.
fn centered(values: &[f64]) -> Result<(Vec<f64>, usize)> {
    let first = values.iter().position(|v| v.is_finite());
    let last = values.iter().rposition(|v| v.is_finite());
    let (Some(first), Some(last)) = (first, last) else {
        return Err(Error::EmptyInput("series has no valid values".into()));
    };
    let span = &values[first..=last];
    let m = span.iter().filter(|v| v.is_finite()).count();
    let mean = span.iter().filter(|v| v.is_finite()).sum::<f64>() / m as f64;
    let x: Vec<f64> = span
        .iter()
        .map(|v| if v.is_finite() { v - mean } else { 0.0 })
        .collect();
    Ok((x, m))
}

fn check_lag(len: usize, max_lag: usize) -> Result<()> {
    if max_lag >= len {
        return Err(Error::Parameter(format!(
            "max lag {max_lag} needs more than {len} samples"
        )));
    }
    Ok(())
}

/// Biased sample ACF `c_τ = Σ(x_i-x̄)(x_{i+τ}-x̄) / Σ(x_i-x̄)²` via FFT.
pub fn acf_values(values: &[f64], max_lag: usize) -> Result<Vec<f64>> {
    let (x, _) = centered(values)?;
    check_lag(x.len(), max_lag)?;
    let n = x.len();
    let size = (2 * n).next_power_of_two();
    let mut buf: Vec<Complex<f64>> = x
        .iter()
        .map(|&v| Complex::new(v, 0.0))
        .chain(std::iter::repeat(Complex::new(0.0, 0.0)))
        .take(size)
        .collect();
    let mut planner = FftPlanner::<f64>::new();
    planner.plan_fft_forward(size).process(&mut buf);
    for z in buf.iter_mut() {
        *z = Complex::new(z.norm_sqr(), 0.0);
    }
    planner.plan_fft_inverse(size).process(&mut buf);
    let r0 = buf[0].re;
    let energy: f64 = x.iter().map(|v| v * v).sum();
    if !(energy > 0.0) || !(r0 > 0.0) {
        return Err(Error::Degenerate("zero-variance series".into()));
    }
    let mut c: Vec<f64> = buf[..=max_lag].iter().map(|z| z.re / r0).collect();
    c[0] = 1.0;
    Ok(c)
}

/// ACF of a rotation series; invalid positions are excluded.
pub fn acf(series: &RotationSeries, max_lag: usize) -> Result<AcfResult> {
    let id = format!("{}-{:?}", series.hemisphere.name(), series.kind).to_lowercase();
    acf_with_id(id, series.values(), max_lag)
}

pub fn acf_with_id(series_id: impl Into<String>, values: &[f64], max_lag: usize) -> Result<AcfResult> {
    let c = acf_values(values, max_lag)?;
    let m = values.iter().filter(|v| v.is_finite()).count();
    if m < 4 * max_lag {
        log::warn!("ACF with M = {m} < 4·max_lag = {}", 4 * max_lag);
    }
    Ok(AcfResult {
        series_id: series_id.into(),
        c,
        n_effective: m,
        sigma_bound: acf_bounds(m.max(2)).0,
    })
}

/// ACF of a concatenation that ignores lagged products crossing a seam.
/// `seams` are indices where a new segment starts.
pub fn acf_without_seams(values: &[f64], seams: &[usize], max_lag: usize) -> Result<Vec<f64>> {
    let m = values.iter().filter(|v| v.is_finite()).count();
    if m == 0 {
        return Err(Error::EmptyInput("series has no valid values".into()));
    }
    check_lag(values.len(), max_lag)?;
    let mean = values.iter().filter(|v| v.is_finite()).sum::<f64>() / m as f64;
    let x: Vec<f64> = values
        .iter()
        .map(|v| if v.is_finite() { v - mean } else { 0.0 })
        .collect();
    let energy: f64 = x.iter().map(|v| v * v).sum();
    if !(energy > 0.0) {
        return Err(Error::Degenerate("zero-variance series".into()));
    }
    let mut bounds: Vec<usize> = std::iter::once(0)
        .chain(seams.iter().copied().filter(|&s| s > 0 && s < x.len()))
        .chain(std::iter::once(x.len()))
        .collect();
    bounds.sort_unstable();
    bounds.dedup();
    let mut c = vec![0.0; max_lag + 1];
    for seg in bounds.windows(2) {
        let part = &x[seg[0]..seg[1]];
        for (tau, ct) in c.iter_mut().enumerate() {
            if tau >= part.len() {
                break;
            }
            *ct += part.iter().zip(&part[tau..]).map(|(a, b)| a * b).sum::<f64>();
        }
    }
    for v in c.iter_mut() {
        *v /= energy;
    }
    Ok(c)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SignificanceClass {
    Below1Sigma,
    Between1and2Sigma,
    Above2Sigma,
}

impl SignificanceClass {
    pub fn classify(value: f64, one_sigma: f64) -> Self {
        if value > 2.0 * one_sigma {
            SignificanceClass::Above2Sigma
        } else if value > one_sigma {
            SignificanceClass::Between1and2Sigma
        } else {
            SignificanceClass::Below1Sigma
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AcfPeak {
    pub lag: usize,
    pub value: f64,
    pub significance_class: SignificanceClass,
    /// Contiguous lags around the peak with `c_τ ≥ 1σ`; 0 below the bound.
    pub width_at_1sigma: usize,
}

/// Local maxima of `c_τ` inside `band`. A lag qualifies when it beats its
/// in-band neighbours, so band endpoints only need to beat one side.
pub fn find_peaks(acf: &AcfResult, band: RangeInclusive<usize>) -> Vec<AcfPeak> {
    let lo = (*band.start()).max(1);
    let hi = (*band.end()).min(acf.max_lag());
    if lo > hi {
        return Vec::new();
    }
    let c = &acf.c;
    let sigma = acf.sigma_bound;
    (lo..=hi)
        .filter(|&t| (t == lo || c[t] > c[t - 1]) && (t == hi || c[t] > c[t + 1]))
        .map(|t| AcfPeak {
            lag: t,
            value: c[t],
            significance_class: SignificanceClass::classify(c[t], sigma),
            width_at_1sigma: width_at(c, t, sigma),
        })
        .collect()
}

fn width_at(c: &[f64], peak: usize, level: f64) -> usize {
    if c[peak] < level {
        return 0;
    }
    let left = (1..=peak).rev().take_while(|&t| c[t] >= level).count();
    let right = (peak + 1..c.len()).take_while(|&t| c[t] >= level).count();
    left + right
}

/// Lags where `|a - b| > 2·max(σ_a, σ_b)`, ascending.
pub fn compare_acfs(a: &AcfResult, b: &AcfResult) -> Result<Vec<usize>> {
    if a.c.len() != b.c.len() {
        return Err(Error::Alignment(format!(
            "ACFs computed to different lags ({} vs {})",
            a.max_lag(),
            b.max_lag()
        )));
    }
    let threshold = 2.0 * a.sigma_bound.max(b.sigma_bound);
    Ok((1..a.c.len())
        .filter(|&t| (a.c[t] - b.c[t]).abs() > threshold)
        .collect())
}

/// Largest `f.c - x.c` over `band`, in units of the 1σ bound.
pub fn decrease_statistic(f_acf: &AcfResult, x_acf: &AcfResult, band: RangeInclusive<usize>) -> f64 {
    let sigma = f_acf.sigma_bound.max(x_acf.sigma_bound);
    let hi = (*band.end()).min(f_acf.max_lag()).min(x_acf.max_lag());
    (*band.start()..=hi)
        .map(|t| (f_acf.c[t] - x_acf.c[t]) / sigma)
        .fold(f64::NEG_INFINITY, f64::max)
}
