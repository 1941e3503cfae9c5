//! Synthetic signals with known structure, used as ground truth for the
//! detection, significance and stabilization code.
//!
//! Randomness comes from `ChaCha8Rng` (rand_chacha 0.9) seeded through
//! `seed_from_u64`, with Gaussian deviates from `rand_distr::StandardNormal`.
//! Both crates are pinned so a seed yields the same series on every
//! platform. Each component of a spec draws from its own stream, keyed by
//! the spec seed and a SHA-256 fingerprint of the component, so reordering
//! a [`SynthKind::Composite`] does not change the sum.

use std::f64::consts::PI;

use chrono::{Datelike, Duration, NaiveDate};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::ingest::{CarringtonCalendar, DailyAreaRecord, Hemisphere, MonthlyWolfRecord, YearMonth};
use crate::timeseries::{RotationSeries, SeriesKind};

/// Slowly varying pulse amplitude.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Envelope {
    Constant { amplitude: f64 },
    /// `min + (max - min)·sin²(π·t/period)`, zero at `t = 0`.
    Cycle { period: f64, min: f64, max: f64 },
}

impl Envelope {
    pub fn at(&self, t: f64) -> f64 {
        match *self {
            Envelope::Constant { amplitude } => amplitude,
            Envelope::Cycle { period, min, max } => {
                min + (max - min) * (PI * t / period).sin().powi(2)
            }
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            Envelope::Constant { amplitude } if amplitude.is_finite() => Ok(()),
            Envelope::Cycle { period, min, max } if period > 0.0 && min.is_finite() && max.is_finite() => Ok(()),
            _ => Err(Error::Spec(format!("invalid envelope {self:?}"))),
        }
    }
}

impl Default for Envelope {
    fn default() -> Self {
        Envelope::Constant { amplitude: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SynthKind {
    /// Unit-variance Gaussian white noise.
    White,
    /// Stationary unit-variance AR(1): `x_t = α·x_{t-1} + √(1-α²)·ε_t`.
    Ar1 { alpha: f64 },
    Sine { period: f64, amplitude: f64, phase: f64 },
    /// Raised-cosine pulses of full width `pulse_width`. The first is
    /// centered at 0; each separation is `period + N(0, jitter_std²)`
    /// (floored at half a pulse width).
    PulseTrain {
        period: f64,
        jitter_std: f64,
        pulse_width: f64,
        #[serde(default)]
        amplitude_envelope: Envelope,
    },
    Composite { components: Vec<SynthKind> },
}

impl SynthKind {
    fn validate(&self) -> Result<()> {
        match self {
            SynthKind::White => Ok(()),
            SynthKind::Ar1 { alpha } if (0.0..1.0).contains(alpha) => Ok(()),
            SynthKind::Sine { period, amplitude, phase }
                if *period > 0.0 && amplitude.is_finite() && phase.is_finite() =>
            {
                Ok(())
            }
            SynthKind::PulseTrain {
                period,
                jitter_std,
                pulse_width,
                amplitude_envelope,
            } if *period > 0.0 && *jitter_std >= 0.0 && *pulse_width > 0.0 => {
                amplitude_envelope.validate()
            }
            SynthKind::Composite { components } => components.iter().try_for_each(Self::validate),
            other => Err(Error::Spec(format!("invalid parameters in {other:?}"))),
        }
    }

    fn fingerprint(&self) -> u64 {
        let json = serde_json::to_vec(self).expect("synth kinds serialize");
        let digest = Sha256::digest(&json);
        u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub length: usize,
    pub seed: u64,
    pub kind: SynthKind,
}

impl SynthSpec {
    pub fn new(length: usize, seed: u64, kind: SynthKind) -> Self {
        Self { length, seed, kind }
    }
}

fn rng_for(seed: u64, kind: &SynthKind) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ kind.fingerprint().rotate_left(17))
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

fn fill(kind: &SynthKind, seed: u64, out: &mut [f64]) {
    let n = out.len();
    match kind {
        SynthKind::White => {
            let mut rng = rng_for(seed, kind);
            out.iter_mut().for_each(|v| *v += normal(&mut rng));
        }
        SynthKind::Ar1 { alpha } => {
            let mut rng = rng_for(seed, kind);
            let innovation = (1.0 - alpha * alpha).sqrt();
            let mut x = normal(&mut rng);
            for v in out.iter_mut() {
                *v += x;
                x = alpha * x + innovation * normal(&mut rng);
            }
        }
        SynthKind::Sine { period, amplitude, phase } => {
            for (i, v) in out.iter_mut().enumerate() {
                *v += amplitude * (2.0 * PI * i as f64 / period + phase).sin();
            }
        }
        SynthKind::PulseTrain {
            period,
            jitter_std,
            pulse_width,
            amplitude_envelope,
        } => {
            let mut rng = rng_for(seed, kind);
            let half = pulse_width / 2.0;
            let mut center = 0.0;
            while center - half <= n as f64 {
                let amp = amplitude_envelope.at(center);
                let lo = (center - half).ceil().max(0.0) as usize;
                let hi = ((center + half).floor().max(-1.0) + 1.0) as usize;
                for (i, v) in out.iter_mut().enumerate().take(hi.min(n)).skip(lo) {
                    let d = i as f64 - center;
                    if d.abs() < half {
                        *v += amp * 0.5 * (1.0 + (PI * d / half).cos());
                    }
                }
                center += (period + jitter_std * normal(&mut rng)).max(half);
            }
        }
        SynthKind::Composite { components } => {
            for c in components {
                fill(c, seed, out);
            }
        }
    }
}

/// Raw values for a spec.
pub fn generate_values(spec: &SynthSpec) -> Result<Vec<f64>> {
    if spec.length == 0 {
        return Err(Error::Spec("length must be positive".into()));
    }
    spec.kind.validate()?;
    let mut out = vec![0.0; spec.length];
    fill(&spec.kind, spec.seed, &mut out);
    Ok(out)
}

/// Generated series as a fluctuation-kind [`RotationSeries`] starting at
/// rotation 1.
pub fn generate(spec: &SynthSpec) -> Result<RotationSeries> {
    RotationSeries::from_values(
        Hemisphere::North,
        SeriesKind::Fluctuation,
        1,
        generate_values(spec)?,
    )
}

/// `generate(f_spec)_i · envelope_i^k`.
pub fn heteroscedastic(f_spec: &SynthSpec, envelope: &RotationSeries, k: f64) -> Result<RotationSeries> {
    if envelope.len() != f_spec.length {
        return Err(Error::Spec(format!(
            "envelope length {} differs from spec length {}",
            envelope.len(),
            f_spec.length
        )));
    }
    if let Some(bad) = envelope.values().iter().find(|v| !(**v > 0.0)) {
        return Err(Error::Spec(format!("envelope must be positive, found {bad}")));
    }
    let base = generate_values(f_spec)?;
    let values = base
        .iter()
        .zip(envelope.values())
        .map(|(f, e)| f * e.powf(k))
        .collect();
    RotationSeries::from_values(
        envelope.hemisphere,
        SeriesKind::Fluctuation,
        envelope.start_rotation(),
        values,
    )
}

/// Per-hemisphere parameters of [`solar_dataset`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HemisphereModel {
    /// Rotation-mean area at the peak of the activity level.
    pub peak_area: f64,
    /// Exponent tying the fluctuation amplitude to the activity level.
    pub k: f64,
    /// Amplitude of the fluctuation term, in units of `level^k`.
    pub fluctuation_scale: f64,
    /// Weight of the pulse train inside the fluctuation term.
    pub pulse_weight: f64,
}

/// A synthetic stand-in for the daily-area and monthly Wolf archives:
/// activity follows `sin²` cycles of fixed length starting at
/// `first_minimum`, and rotation-mean areas carry a ~`pulse_period`-rotation
/// pulse train whose amplitude scales as `level^k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolarDatasetSpec {
    pub seed: u64,
    pub start: NaiveDate,
    pub end: NaiveDate,
    pub first_minimum: NaiveDate,
    pub cycle_days: f64,
    pub pulse_period: f64,
    pub pulse_jitter: f64,
    pub wolf_peak: f64,
    pub missing_fraction: f64,
    pub north: HemisphereModel,
    pub south: HemisphereModel,
}

impl Default for SolarDatasetSpec {
    fn default() -> Self {
        Self {
            seed: 1,
            start: NaiveDate::from_ymd_opt(1874, 5, 1).expect("valid date"),
            end: NaiveDate::from_ymd_opt(2012, 6, 30).expect("valid date"),
            first_minimum: NaiveDate::from_ymd_opt(1878, 12, 15).expect("valid date"),
            cycle_days: 11.0 * 365.25,
            pulse_period: 10.0,
            pulse_jitter: 1.0,
            wolf_peak: 150.0,
            missing_fraction: 0.02,
            north: HemisphereModel {
                peak_area: 1200.0,
                k: 0.68,
                fluctuation_scale: 4.0,
                pulse_weight: 1.5,
            },
            south: HemisphereModel {
                peak_area: 1000.0,
                k: 0.83,
                fluctuation_scale: 1.8,
                pulse_weight: 1.5,
            },
        }
    }
}

/// Daily records for both hemispheres and the monthly Wolf series.
pub fn solar_dataset(spec: &SolarDatasetSpec) -> Result<(Vec<DailyAreaRecord>, Vec<MonthlyWolfRecord>)> {
    if spec.end <= spec.start || spec.cycle_days <= 0.0 || !(0.0..1.0).contains(&spec.missing_fraction) {
        return Err(Error::Spec("invalid solar dataset spec".into()));
    }
    let level = |date: NaiveDate| -> f64 {
        let t = (date - spec.first_minimum).num_days() as f64;
        0.01 + (PI * t.rem_euclid(spec.cycle_days) / spec.cycle_days).sin().powi(2)
    };

    let calendar = CarringtonCalendar::standard();
    let first_rot = calendar.rotation_of(spec.start)?;
    let last_rot = calendar.rotation_of(spec.end)?;
    let n_rot = (last_rot - first_rot + 1) as usize;

    let mut records = Vec::new();
    for (h_idx, (hemisphere, model)) in [(Hemisphere::North, &spec.north), (Hemisphere::South, &spec.south)]
        .into_iter()
        .enumerate()
    {
        let hseed = spec.seed.wrapping_add(0x9E37_79B9_7F4A_7C15u64.wrapping_mul(h_idx as u64 + 1));
        let pulses = generate_values(&SynthSpec::new(
            n_rot,
            hseed,
            SynthKind::PulseTrain {
                period: spec.pulse_period,
                jitter_std: spec.pulse_jitter,
                pulse_width: 3.0,
                amplitude_envelope: Envelope::Constant { amplitude: 1.0 },
            },
        ))?;
        let noise = generate_values(&SynthSpec::new(n_rot, hseed, SynthKind::White))?;
        let mut rng = ChaCha8Rng::seed_from_u64(hseed ^ 0xD1B5_4A32_D192_ED03);
        let pulse_mean = pulses.iter().sum::<f64>() / n_rot as f64;

        let mut date = spec.start;
        while date <= spec.end {
            let rot = calendar.rotation_of(date)?;
            let i = (rot - first_rot) as usize;
            let lvl = level(calendar.rotation_midpoint(rot).date()) * model.peak_area;
            let fluct = model.fluctuation_scale
                * lvl.powf(model.k)
                * (model.pulse_weight * (pulses[i] - pulse_mean) + noise[i]);
            let rotation_area = (lvl + fluct).max(0.0);
            let daily = rotation_area * (1.0 + 0.2 * normal(&mut rng));
            let missing = rng.random::<f64>() < spec.missing_fraction;
            if !missing {
                records.push(DailyAreaRecord {
                    date,
                    hemisphere,
                    area: daily.max(0.0),
                });
            }
            date += Duration::days(1);
        }
    }
    records.sort_by_key(|r| (r.date, r.hemisphere));

    let mut wolf = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed ^ 0x5851_F42D_4C95_7F2D);
    let mut month = YearMonth::of_date(spec.start);
    let last = YearMonth::of_date(spec.end);
    while month <= last {
        let mid = NaiveDate::from_ymd_opt(month.year, month.month, 15).expect("valid date");
        debug_assert_eq!(mid.month(), month.month);
        let value = (spec.wolf_peak * level(mid) + 6.0 * normal(&mut rng)).max(0.0);
        wolf.push(MonthlyWolfRecord {
            month,
            wolf: (value * 10.0).round() / 10.0,
        });
        month = month.succ();
    }
    Ok((records, wolf))
}
