//! Morlet continuous wavelet transform with cone of influence and AR(1)
//! red-noise significance.
//!
//! Conventions: the transform is computed in Fourier space on the centered
//! (optionally standardized) series zero-padded to a power of two, with the
//! wavelet normalized to unit energy at every scale, so white noise of
//! variance σ² has expected power σ². Power grids are stored per scale:
//! `power[j][t]`.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::ops::RangeInclusive;

use num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::acfspec::{acf_values, AcfResult};
use crate::error::{Error, Result};
use crate::segment::{Activity, ActivityMask};
use crate::timeseries::RotationSeries;

pub const MIN_WAVELET_LENGTH: usize = 32;

/// Decorrelation factor for time-averaged Morlet power.
const GAMMA_MORLET: f64 = 2.32;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MorletConfig {
    pub s0: f64,
    /// Scale step in octaves.
    pub dj: f64,
    pub n_scales: usize,
    pub omega0: f64,
    /// Divide the centered series by its standard deviation.
    pub standardize: bool,
    pub level: f64,
}

impl Default for MorletConfig {
    fn default() -> Self {
        Self {
            s0: 2.0,
            dj: 0.125,
            n_scales: 41,
            omega0: 6.0,
            standardize: true,
            level: 0.95,
        }
    }
}

impl MorletConfig {
    pub fn scales(&self) -> Vec<f64> {
        (0..self.n_scales)
            .map(|j| self.s0 * 2f64.powf(j as f64 * self.dj))
            .collect()
    }

    fn validate(&self) -> Result<()> {
        if !(self.s0 > 0.0 && self.dj > 0.0 && self.n_scales > 0 && self.omega0 > 0.0) {
            return Err(Error::Parameter(format!("invalid scale grid {self:?}")));
        }
        check_level(self.level)
    }
}

fn check_level(level: f64) -> Result<()> {
    if !(level > 0.5 && level < 1.0) {
        return Err(Error::Parameter(format!("significance level must lie in (0.5, 1), got {level}")));
    }
    Ok(())
}

/// Fourier period per unit scale, `4π / (ω0 + √(2 + ω0²))`.
pub fn fourier_factor(omega0: f64) -> f64 {
    4.0 * PI / (omega0 + (2.0 + omega0 * omega0).sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveletSpectrum {
    /// Rotation numbers.
    pub times: Vec<i64>,
    pub scales: Vec<f64>,
    pub periods: Vec<f64>,
    /// `power[j][t]`.
    pub power: Vec<Vec<f64>>,
    /// Largest trustworthy period at each time.
    pub coi: Vec<f64>,
    pub alpha: f64,
    pub omega0: f64,
    /// Variance of the transformed series (1 when standardized).
    pub variance: f64,
    pub level: f64,
    /// Pointwise power threshold per scale.
    pub thresholds: Vec<f64>,
    /// `significance_mask[j][t]`.
    pub significance_mask: Vec<Vec<bool>>,
}

impl WaveletSpectrum {
    pub fn n_times(&self) -> usize {
        self.times.len()
    }

    pub fn in_coi(&self, j: usize, t: usize) -> bool {
        self.periods[j] <= self.coi[t]
    }

    /// Scale index whose period is closest to `period`.
    pub fn nearest_scale(&self, period: f64) -> usize {
        (0..self.periods.len())
            .min_by(|&a, &b| {
                (self.periods[a] - period)
                    .abs()
                    .total_cmp(&(self.periods[b] - period).abs())
            })
            .expect("spectrum has scales")
    }

    /// Long format `time,period,power,significant`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("time,period,power,significant\n");
        for (t, time) in self.times.iter().enumerate() {
            for j in 0..self.periods.len() {
                let _ = writeln!(
                    s,
                    "{time},{},{},{}",
                    self.periods[j],
                    self.power[j][t],
                    u8::from(self.significance_mask[j][t])
                );
            }
        }
        s
    }

    pub fn metadata(&self) -> WaveletMetadata {
        WaveletMetadata {
            first_time: self.times.first().copied().unwrap_or_default(),
            n_times: self.times.len(),
            scales: self.scales.clone(),
            periods: self.periods.clone(),
            coi: self.coi.clone(),
            alpha: self.alpha,
            omega0: self.omega0,
            variance: self.variance,
            level: self.level,
            thresholds: self.thresholds.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveletMetadata {
    pub first_time: i64,
    pub n_times: usize,
    pub scales: Vec<f64>,
    pub periods: Vec<f64>,
    pub coi: Vec<f64>,
    pub alpha: f64,
    pub omega0: f64,
    pub variance: f64,
    pub level: f64,
    pub thresholds: Vec<f64>,
}

/// Transform of the valid span of `series`; interior gaps are zero after
/// centering.
pub fn morlet_cwt(series: &RotationSeries, config: &MorletConfig) -> Result<WaveletSpectrum> {
    let span = series
        .valid_span()
        .ok_or_else(|| Error::EmptyInput("series has no valid values".into()))?;
    let first = series.start_rotation() + *span.start() as i64;
    morlet_cwt_values(&series.values()[span], first, config)
}

pub fn morlet_cwt_values(values: &[f64], first_time: i64, config: &MorletConfig) -> Result<WaveletSpectrum> {
    config.validate()?;
    let n = values.len();
    let valid: Vec<f64> = values.iter().copied().filter(|v| v.is_finite()).collect();
    if valid.len() < MIN_WAVELET_LENGTH {
        return Err(Error::Parameter(format!(
            "wavelet transform needs at least {MIN_WAVELET_LENGTH} valid values, got {}",
            valid.len()
        )));
    }
    let mean = valid.iter().sum::<f64>() / valid.len() as f64;
    let variance = valid.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / valid.len() as f64;
    if !(variance > 0.0) {
        return Err(Error::Degenerate("zero-variance series".into()));
    }
    let scale = if config.standardize { variance.sqrt() } else { 1.0 };
    let x: Vec<f64> = values
        .iter()
        .map(|v| if v.is_finite() { (v - mean) / scale } else { 0.0 })
        .collect();
    let alpha = acf_values(&x, 1)?[1].clamp(0.0, 0.99);

    let padded = (2 * n).next_power_of_two();
    let mut planner = FftPlanner::<f64>::new();
    let forward = planner.plan_fft_forward(padded);
    let inverse = planner.plan_fft_inverse(padded);
    let mut spectrum: Vec<Complex<f64>> = x.iter().map(|&v| Complex::new(v, 0.0)).collect();
    spectrum.resize(padded, Complex::new(0.0, 0.0));
    forward.process(&mut spectrum);

    let omega: Vec<f64> = (0..padded)
        .map(|k| {
            let k = if k <= padded / 2 { k as f64 } else { k as f64 - padded as f64 };
            2.0 * PI * k / padded as f64
        })
        .collect();
    let scales = config.scales();
    let norm0 = PI.powf(-0.25);
    let mut power = Vec::with_capacity(scales.len());
    let mut buf = vec![Complex::new(0.0, 0.0); padded];
    for &s in &scales {
        let amp = (2.0 * PI * s).sqrt() * norm0;
        for k in 0..padded {
            let w = omega[k];
            let psi = if w > 0.0 { amp * (-(s * w - config.omega0).powi(2) / 2.0).exp() } else { 0.0 };
            buf[k] = spectrum[k] * psi;
        }
        inverse.process(&mut buf);
        let inv = 1.0 / padded as f64;
        power.push(buf[..n].iter().map(|c| (c * inv).norm_sqr()).collect::<Vec<f64>>());
    }

    let ff = fourier_factor(config.omega0);
    let periods: Vec<f64> = scales.iter().map(|s| ff * s).collect();
    let coi_factor = ff / 2f64.sqrt();
    let coi = (0..n).map(|t| coi_factor * t.min(n - 1 - t) as f64).collect();
    let mut out = WaveletSpectrum {
        times: (0..n).map(|t| first_time + t as i64).collect(),
        scales,
        periods,
        power,
        coi,
        alpha,
        omega0: config.omega0,
        variance: if config.standardize { 1.0 } else { variance },
        level: config.level,
        thresholds: Vec::new(),
        significance_mask: Vec::new(),
    };
    red_noise_significance(&mut out, config.level)?;
    Ok(out)
}

/// Normalized AR(1) background spectrum at `period` (unit variance).
pub fn red_noise_background(alpha: f64, period: f64) -> f64 {
    (1.0 - alpha * alpha) / (1.0 + alpha * alpha - 2.0 * alpha * (2.0 * PI / period).cos())
}

fn chi2_quantile(dof: f64, level: f64) -> Result<f64> {
    let dist = ChiSquared::new(dof).map_err(|e| Error::Parameter(e.to_string()))?;
    Ok(dist.inverse_cdf(level))
}

/// Recomputes thresholds and mask: power exceeds `σ²·P_k·χ²₂(level)/2`
/// and the point lies inside the cone of influence.
pub fn red_noise_significance(spectrum: &mut WaveletSpectrum, level: f64) -> Result<()> {
    check_level(level)?;
    let q = chi2_quantile(2.0, level)? / 2.0;
    spectrum.level = level;
    spectrum.thresholds = spectrum
        .periods
        .iter()
        .map(|&p| spectrum.variance * red_noise_background(spectrum.alpha, p) * q)
        .collect();
    spectrum.significance_mask = (0..spectrum.periods.len())
        .map(|j| {
            (0..spectrum.n_times())
                .map(|t| spectrum.power[j][t] > spectrum.thresholds[j] && spectrum.in_coi(j, t))
                .collect()
        })
        .collect();
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlobalSpectrum {
    pub periods: Vec<f64>,
    pub mean_power: Vec<f64>,
    pub significance_level: Vec<f64>,
    /// Times averaged per period.
    pub n_averaged: Vec<usize>,
}

impl GlobalSpectrum {
    /// Period of the largest mean power; first wins ties.
    pub fn argmax_period(&self) -> f64 {
        let mut best = 0;
        for j in 1..self.mean_power.len() {
            if self.mean_power[j] > self.mean_power[best] {
                best = j;
            }
        }
        self.periods[best]
    }

    /// Linear interpolation of mean power at `period`; `None` outside the grid.
    pub fn power_at(&self, period: f64) -> Option<f64> {
        let p = &self.periods;
        if period < p[0] || period > p[p.len() - 1] {
            return None;
        }
        let j = p.partition_point(|&q| q < period);
        if j == 0 || p[j] == period {
            return Some(self.mean_power[j]);
        }
        let w = (period - p[j - 1]) / (p[j] - p[j - 1]);
        Some(self.mean_power[j - 1] * (1.0 - w) + self.mean_power[j] * w)
    }

    /// Local maxima of mean power, by period.
    pub fn peak_periods(&self) -> Vec<f64> {
        let m = &self.mean_power;
        (0..m.len())
            .filter(|&j| (j == 0 || m[j] > m[j - 1]) && (j + 1 == m.len() || m[j] >= m[j + 1]))
            .map(|j| self.periods[j])
            .collect()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("period,mean_power,significance_level,n_averaged\n");
        for j in 0..self.periods.len() {
            let _ = writeln!(
                s,
                "{},{},{},{}",
                self.periods[j], self.mean_power[j], self.significance_level[j], self.n_averaged[j]
            );
        }
        s
    }
}

/// Time average of power over in-coi times per scale (all times where none
/// is inside), with the time-averaged red-noise threshold of reduced degrees
/// of freedom `ν = 2√(1 + (n_a/(2.32·s))²)`.
pub fn global_spectrum(spectrum: &WaveletSpectrum) -> Result<GlobalSpectrum> {
    let n = spectrum.n_times();
    let mut mean_power = Vec::with_capacity(spectrum.periods.len());
    let mut significance_level = Vec::with_capacity(spectrum.periods.len());
    let mut n_averaged = Vec::with_capacity(spectrum.periods.len());
    for j in 0..spectrum.periods.len() {
        let inside: Vec<usize> = (0..n).filter(|&t| spectrum.in_coi(j, t)).collect();
        let times: Vec<usize> = if inside.is_empty() { (0..n).collect() } else { inside };
        let na = times.len();
        mean_power.push(times.iter().map(|&t| spectrum.power[j][t]).sum::<f64>() / na as f64);
        let dof = 2.0 * (1.0 + (na as f64 / (GAMMA_MORLET * spectrum.scales[j])).powi(2)).sqrt();
        let q = chi2_quantile(dof, spectrum.level)? / dof;
        significance_level
            .push(spectrum.variance * red_noise_background(spectrum.alpha, spectrum.periods[j]) * q);
        n_averaged.push(na);
    }
    Ok(GlobalSpectrum {
        periods: spectrum.periods.clone(),
        mean_power,
        significance_level,
        n_averaged,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignificantExtent {
    pub start_rotation: i64,
    pub end_rotation: i64,
    /// Activity labels met inside the interval, in order of first appearance.
    pub activity: Vec<Activity>,
}

/// Maximal runs of times at which some period in `band` is significant.
pub fn significant_extents(
    spectrum: &WaveletSpectrum,
    band: RangeInclusive<f64>,
    mask: Option<&ActivityMask>,
) -> Vec<SignificantExtent> {
    let rows: Vec<usize> = (0..spectrum.periods.len())
        .filter(|&j| band.contains(&spectrum.periods[j]))
        .collect();
    let hit: Vec<bool> = (0..spectrum.n_times())
        .map(|t| rows.iter().any(|&j| spectrum.significance_mask[j][t]))
        .collect();
    let mut out = Vec::new();
    let mut t = 0;
    while t < hit.len() {
        if !hit[t] {
            t += 1;
            continue;
        }
        let start = t;
        while t < hit.len() && hit[t] {
            t += 1;
        }
        let (a, b) = (spectrum.times[start], spectrum.times[t - 1]);
        let mut activity = Vec::new();
        if let Some(mask) = mask {
            for r in a..=b {
                if let Some(l) = mask.label_of(r) {
                    if !activity.contains(&l) {
                        activity.push(l);
                    }
                }
            }
        }
        out.push(SignificantExtent {
            start_rotation: a,
            end_rotation: b,
            activity,
        });
    }
    out
}

/// Pearson correlation over integer lags in `band` between `c_τ` and the
/// global spectrum interpolated at period `τ`.
pub fn acf_wavelet_agreement(acf: &AcfResult, global: &GlobalSpectrum, band: RangeInclusive<usize>) -> Result<f64> {
    let mut a = Vec::new();
    let mut b = Vec::new();
    for tau in band {
        if tau > acf.max_lag() {
            break;
        }
        if let Some(p) = global.power_at(tau as f64) {
            a.push(acf.c[tau]);
            b.push(p);
        }
    }
    if a.len() < 3 {
        return Err(Error::InsufficientData {
            what: "lags shared by ACF and global spectrum",
            needed: 3,
            got: a.len(),
        });
    }
    pearson(&a, &b)
}

fn pearson(a: &[f64], b: &[f64]) -> Result<f64> {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
    if !(va > 0.0 && vb > 0.0) {
        return Err(Error::Degenerate("constant input to correlation".into()));
    }
    Ok((cov / (va * vb).sqrt()).clamp(-1.0, 1.0))
}
