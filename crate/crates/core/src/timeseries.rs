//! Per-rotation series: rotation means, centered smoothing, fluctuations and
//! their signed parts.
//!
//! A [`RotationSeries`] is indexed by absolute Carrington rotation number.
//! Positions that carry no usable value (no observed days, smoother edges,
//! undefined transforms) hold `NaN` and an invalid [`Flag`]; every consumer
//! skips them rather than fabricating data.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{CarringtonCalendar, DailyAreaRecord, Hemisphere};

/// Rotations with fewer observed days than this are flagged low-coverage.
pub const LOW_COVERAGE_DAYS: u32 = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SeriesKind {
    Mean,
    Smoothed,
    Fluctuation,
    Stabilized,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Flag {
    Ok,
    /// Valid, but built from fewer than [`LOW_COVERAGE_DAYS`] observed days.
    LowCoverage,
    /// No observed day in the rotation, or a missing input inside a window.
    Missing,
    /// Within half a smoothing window of either end.
    Edge,
    /// Transform undefined here (e.g. non-positive smoothed activity).
    Undefined,
}

impl Flag {
    pub fn is_valid(self) -> bool {
        matches!(self, Flag::Ok | Flag::LowCoverage)
    }

    pub fn code(self) -> &'static str {
        match self {
            Flag::Ok => "ok",
            Flag::LowCoverage => "low",
            Flag::Missing => "missing",
            Flag::Edge => "edge",
            Flag::Undefined => "undefined",
        }
    }

    fn parse(code: &str) -> Option<Flag> {
        Some(match code {
            "ok" => Flag::Ok,
            "low" => Flag::LowCoverage,
            "missing" => Flag::Missing,
            "edge" => Flag::Edge,
            "undefined" => Flag::Undefined,
            _ => return None,
        })
    }

    /// The flag a derived value inherits from two inputs.
    fn combine(self, other: Flag) -> Flag {
        match (self.is_valid(), other.is_valid()) {
            (true, true) if self == Flag::LowCoverage || other == Flag::LowCoverage => {
                Flag::LowCoverage
            }
            (true, true) => Flag::Ok,
            (false, _) => self,
            (true, false) => other,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RotationSeries {
    pub hemisphere: Hemisphere,
    pub kind: SeriesKind,
    start_rotation: i64,
    values: Vec<f64>,
    flags: Vec<Flag>,
}

impl RotationSeries {
    /// Builds a series; invalid flags force `NaN`, non-finite values are
    /// flagged undefined.
    pub fn new(
        hemisphere: Hemisphere,
        kind: SeriesKind,
        start_rotation: i64,
        mut values: Vec<f64>,
        mut flags: Vec<Flag>,
    ) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyInput("rotation series needs at least one value".into()));
        }
        if flags.len() != values.len() {
            return Err(Error::Alignment(format!(
                "{} values but {} flags",
                values.len(),
                flags.len()
            )));
        }
        for (v, f) in values.iter_mut().zip(flags.iter_mut()) {
            if !f.is_valid() {
                *v = f64::NAN;
            } else if !v.is_finite() {
                *f = Flag::Undefined;
                *v = f64::NAN;
            } else if kind == SeriesKind::Mean && *v < 0.0 {
                return Err(Error::Domain(format!("negative rotation mean {v}")));
            }
        }
        Ok(Self {
            hemisphere,
            kind,
            start_rotation,
            values,
            flags,
        })
    }

    /// All-valid series; non-finite entries become undefined.
    pub fn from_values(
        hemisphere: Hemisphere,
        kind: SeriesKind,
        start_rotation: i64,
        values: Vec<f64>,
    ) -> Result<Self> {
        let flags = vec![Flag::Ok; values.len()];
        Self::new(hemisphere, kind, start_rotation, values, flags)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn start_rotation(&self) -> i64 {
        self.start_rotation
    }

    /// Last rotation, inclusive.
    pub fn end_rotation(&self) -> i64 {
        self.start_rotation + self.values.len() as i64 - 1
    }

    pub fn rotations(&self) -> impl Iterator<Item = i64> + '_ {
        (0..self.values.len() as i64).map(move |i| self.start_rotation + i)
    }

    /// Values with `NaN` at invalid positions.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn flags(&self) -> &[Flag] {
        &self.flags
    }

    pub fn is_valid(&self, index: usize) -> bool {
        self.flags[index].is_valid()
    }

    pub fn index_of(&self, rotation: i64) -> Option<usize> {
        let i = rotation - self.start_rotation;
        (0..self.values.len() as i64).contains(&i).then_some(i as usize)
    }

    pub fn value_at(&self, rotation: i64) -> Option<f64> {
        self.index_of(rotation)
            .filter(|&i| self.is_valid(i))
            .map(|i| self.values[i])
    }

    pub fn valid_count(&self) -> usize {
        self.flags.iter().filter(|f| f.is_valid()).count()
    }

    /// Index range from the first to the last valid position.
    pub fn valid_span(&self) -> Option<std::ops::RangeInclusive<usize>> {
        let first = self.flags.iter().position(|f| f.is_valid())?;
        let last = self.flags.iter().rposition(|f| f.is_valid())?;
        Some(first..=last)
    }

    /// Rotations `first..=last`, which must lie inside the series.
    pub fn slice_rotations(&self, first: i64, last: i64) -> Result<RotationSeries> {
        let (Some(a), Some(b)) = (self.index_of(first), self.index_of(last)) else {
            return Err(Error::Alignment(format!(
                "rotations {first}..={last} outside series {}..={}",
                self.start_rotation,
                self.end_rotation()
            )));
        };
        if a > b {
            return Err(Error::Alignment(format!("empty rotation range {first}..={last}")));
        }
        Ok(RotationSeries {
            hemisphere: self.hemisphere,
            kind: self.kind,
            start_rotation: first,
            values: self.values[a..=b].to_vec(),
            flags: self.flags[a..=b].to_vec(),
        })
    }

    /// Applies `f` to valid values; invalid positions are untouched.
    pub fn map_valid(&self, kind: SeriesKind, f: impl Fn(f64) -> f64) -> Result<RotationSeries> {
        let values = self
            .values
            .iter()
            .zip(&self.flags)
            .map(|(&v, fl)| if fl.is_valid() { f(v) } else { f64::NAN })
            .collect();
        RotationSeries::new(
            self.hemisphere,
            kind,
            self.start_rotation,
            values,
            self.flags.clone(),
        )
    }

    /// `rotation,value,flag` with a header; invalid values are written empty.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("rotation,value,flag\n");
        for (i, (v, f)) in self.values.iter().zip(&self.flags).enumerate() {
            let r = self.start_rotation + i as i64;
            if f.is_valid() {
                let _ = writeln!(s, "{r},{v},{}", f.code());
            } else {
                let _ = writeln!(s, "{r},,{}", f.code());
            }
        }
        s
    }

    pub fn from_csv(text: &str, hemisphere: Hemisphere, kind: SeriesKind) -> Result<Self> {
        let mut start = None;
        let mut values = Vec::new();
        let mut flags = Vec::new();
        for (idx, line) in text.lines().enumerate().skip(1) {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let err = |m: &str| Error::Parse {
                line: idx + 1,
                message: m.to_string(),
            };
            let mut parts = line.split(',');
            let (Some(r), Some(v), Some(f)) = (parts.next(), parts.next(), parts.next()) else {
                return Err(err("expected rotation,value,flag"));
            };
            let r: i64 = r.parse().map_err(|_| err("bad rotation"))?;
            let expected = start.map(|s: i64| s + values.len() as i64);
            match expected {
                None => start = Some(r),
                Some(e) if e != r => return Err(err("rotations must be consecutive")),
                _ => {}
            }
            let flag = Flag::parse(f).ok_or_else(|| err("bad flag"))?;
            let value = if v.is_empty() {
                f64::NAN
            } else {
                v.parse().map_err(|_| err("bad value"))?
            };
            values.push(value);
            flags.push(flag);
        }
        let start = start.ok_or_else(|| Error::EmptyInput("series CSV has no rows".into()))?;
        RotationSeries::new(hemisphere, kind, start, values, flags)
    }
}

/// Rotation means plus the per-rotation observed-day counts `K`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RotationMeans {
    pub series: RotationSeries,
    pub observed_days: Vec<u32>,
}

impl RotationMeans {
    pub fn low_coverage_rotations(&self) -> Vec<i64> {
        self.rotations_with(Flag::LowCoverage)
    }

    pub fn missing_rotations(&self) -> Vec<i64> {
        self.rotations_with(Flag::Missing)
    }

    fn rotations_with(&self, flag: Flag) -> Vec<i64> {
        self.series
            .rotations()
            .zip(self.series.flags())
            .filter(|(_, f)| **f == flag)
            .map(|(r, _)| r)
            .collect()
    }
}

/// Mean area per rotation over the days that have observations.
pub fn rotation_means(
    records: &[DailyAreaRecord],
    calendar: &CarringtonCalendar,
    hemisphere: Hemisphere,
) -> Result<RotationMeans> {
    let mut bins: BTreeMap<i64, (f64, u32)> = BTreeMap::new();
    for rec in records.iter().filter(|r| r.hemisphere == hemisphere) {
        let rot = calendar.rotation_of(rec.date)?;
        let bin = bins.entry(rot).or_insert((0.0, 0));
        bin.0 += rec.area;
        bin.1 += 1;
    }
    let (Some(&first), Some(&last)) = (bins.keys().next(), bins.keys().next_back()) else {
        return Err(Error::EmptyInput(format!(
            "no daily records for the {} hemisphere",
            hemisphere.name()
        )));
    };
    let n = (last - first + 1) as usize;
    let mut values = vec![f64::NAN; n];
    let mut flags = vec![Flag::Missing; n];
    let mut observed_days = vec![0; n];
    for (rot, (sum, k)) in bins {
        let i = (rot - first) as usize;
        values[i] = sum / k as f64;
        observed_days[i] = k;
        flags[i] = if k < LOW_COVERAGE_DAYS {
            Flag::LowCoverage
        } else {
            Flag::Ok
        };
    }
    let missing = flags.iter().filter(|f| **f == Flag::Missing).count();
    if missing > 0 {
        log::warn!("{missing} rotations without observations ({})", hemisphere.name());
    }
    Ok(RotationMeans {
        series: RotationSeries::new(hemisphere, SeriesKind::Mean, first, values, flags)?,
        observed_days,
    })
}

/// Centered moving average over an odd `window`; the first and last
/// `(window-1)/2` positions are flagged [`Flag::Edge`].
pub fn smooth_centered(series: &RotationSeries, window: usize) -> Result<RotationSeries> {
    if window < 3 || window % 2 == 0 {
        return Err(Error::Parameter(format!(
            "smoothing window must be odd and >= 3, got {window}"
        )));
    }
    if window > series.len() {
        return Err(Error::Parameter(format!(
            "smoothing window {window} longer than series ({})",
            series.len()
        )));
    }
    let half = window / 2;
    let n = series.len();
    let mut values = vec![f64::NAN; n];
    let mut flags = vec![Flag::Edge; n];
    for i in half..n - half {
        let win = i - half..=i + half;
        if series.flags[win.clone()].iter().all(|f| f.is_valid()) {
            values[i] = series.values[win].iter().sum::<f64>() / window as f64;
            flags[i] = Flag::Ok;
        } else {
            flags[i] = Flag::Missing;
        }
    }
    RotationSeries::new(
        series.hemisphere,
        SeriesKind::Smoothed,
        series.start_rotation,
        values,
        flags,
    )
}

fn check_aligned(a: &RotationSeries, b: &RotationSeries) -> Result<()> {
    if a.start_rotation != b.start_rotation || a.len() != b.len() {
        return Err(Error::Alignment(format!(
            "rotations {}..={} vs {}..={}",
            a.start_rotation,
            a.end_rotation(),
            b.start_rotation,
            b.end_rotation()
        )));
    }
    if a.hemisphere != b.hemisphere {
        return Err(Error::Alignment("series from different hemispheres".into()));
    }
    Ok(())
}

/// Elementwise `mean - smoothed`, aligned by rotation number.
pub fn fluctuations(mean: &RotationSeries, smoothed: &RotationSeries) -> Result<RotationSeries> {
    check_aligned(mean, smoothed)?;
    let flags: Vec<Flag> = mean
        .flags
        .iter()
        .zip(&smoothed.flags)
        .map(|(a, b)| b.combine(*a))
        .collect();
    let values = mean
        .values
        .iter()
        .zip(&smoothed.values)
        .map(|(a, b)| a - b)
        .collect();
    RotationSeries::new(
        mean.hemisphere,
        SeriesKind::Fluctuation,
        mean.start_rotation,
        values,
        flags,
    )
}

/// A fluctuation (or stabilized) series and its positive and negative parts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FluctuationSet {
    pub f: RotationSeries,
    pub f_plus: RotationSeries,
    pub f_minus: RotationSeries,
}

/// `f_plus = f` where `f > 0`, else 0; `f_minus = f` where `f <= 0`, else 0.
pub fn split_signs(f: &RotationSeries) -> FluctuationSet {
    let part = |keep: fn(f64) -> bool| RotationSeries {
        values: f
            .values
            .iter()
            .map(|&v| if v.is_nan() || keep(v) { v } else { 0.0 })
            .collect(),
        ..f.clone()
    };
    FluctuationSet {
        f: f.clone(),
        f_plus: part(|v| v > 0.0),
        f_minus: part(|v| v <= 0.0),
    }
}

#[cfg(test)]
mod tests {
    use chrono::NaiveDate;
    use proptest::prelude::*;

    use super::*;

    fn series(values: Vec<f64>) -> RotationSeries {
        RotationSeries::from_values(Hemisphere::North, SeriesKind::Fluctuation, 100, values).unwrap()
    }

    fn lcg(seed: u64, n: usize) -> Vec<f64> {
        let mut s = seed;
        (0..n)
            .map(|_| {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                (s >> 11) as f64 / (1u64 << 53) as f64 - 0.5
            })
            .collect()
    }

    fn records_for_rotation(cal: &CarringtonCalendar, rotation: i64, area: impl Fn(usize) -> Option<f64>) -> Vec<DailyAreaRecord> {
        let start = cal.rotation_start(rotation).date().succ_opt().unwrap();
        (0..40)
            .filter_map(|d| {
                let date = start + chrono::Duration::days(d as i64);
                if cal.rotation_of(date).unwrap() != rotation {
                    return None;
                }
                area(d).map(|a| DailyAreaRecord {
                    date,
                    hemisphere: Hemisphere::North,
                    area: a,
                })
            })
            .collect()
    }

    #[test]
    fn constant_rotation_mean() {
        let cal = CarringtonCalendar::standard();
        let recs = records_for_rotation(&cal, 900, |_| Some(42.5));
        let m = rotation_means(&recs, &cal, Hemisphere::North).unwrap();
        assert_eq!(m.series.len(), 1);
        assert_eq!(m.series.start_rotation(), 900);
        assert_eq!(m.series.values()[0], 42.5);
        assert!(m.observed_days[0] >= 26);
        assert!(m.low_coverage_rotations().is_empty());
    }

    #[test]
    fn sparse_rotation_is_low_coverage() {
        let cal = CarringtonCalendar::standard();
        let recs = records_for_rotation(&cal, 900, |d| match d {
            3 => Some(100.0),
            10 => Some(200.0),
            20 => Some(300.0),
            _ => None,
        });
        let m = rotation_means(&recs, &cal, Hemisphere::North).unwrap();
        assert_eq!(m.series.values()[0], 200.0);
        assert_eq!(m.observed_days[0], 3);
        assert_eq!(m.low_coverage_rotations(), vec![900]);
        assert!(m.series.is_valid(0));
    }

    #[test]
    fn unobserved_rotation_is_missing_not_zero() {
        let cal = CarringtonCalendar::standard();
        let mut recs = records_for_rotation(&cal, 900, |_| Some(1.0));
        recs.extend(records_for_rotation(&cal, 902, |_| Some(3.0)));
        let m = rotation_means(&recs, &cal, Hemisphere::North).unwrap();
        assert_eq!(m.series.len(), 3);
        assert_eq!(m.missing_rotations(), vec![901]);
        assert!(m.series.values()[1].is_nan());
    }

    #[test]
    fn no_records_for_hemisphere() {
        let cal = CarringtonCalendar::standard();
        let recs = vec![DailyAreaRecord {
            date: NaiveDate::from_ymd_opt(1900, 1, 1).unwrap(),
            hemisphere: Hemisphere::South,
            area: 1.0,
        }];
        assert!(matches!(
            rotation_means(&recs, &cal, Hemisphere::North),
            Err(Error::EmptyInput(_))
        ));
    }

    #[test]
    fn smoothing_constant_and_ramp() {
        let c = smooth_centered(&series(vec![3.0; 20]), 13).unwrap();
        for i in 6..14 {
            assert_eq!(c.values()[i], 3.0);
        }
        assert!(c.flags()[..6].iter().all(|f| *f == Flag::Edge));
        assert!(c.flags()[14..].iter().all(|f| *f == Flag::Edge));

        let ramp = smooth_centered(&series((0..30).map(f64::from).collect()), 13).unwrap();
        for i in 6..24 {
            assert!((ramp.values()[i] - i as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn smoothing_matches_direct_sum() {
        let x = lcg(11, 50);
        let s = smooth_centered(&series(x.clone()), 13).unwrap();
        for i in 6..44 {
            let mut acc = 0.0;
            for j in i - 6..=i + 6 {
                acc += x[j];
            }
            assert!((s.values()[i] - acc / 13.0).abs() < 1e-12);
        }
    }

    #[test]
    fn smoothing_rejects_bad_windows() {
        let s = series(vec![1.0; 10]);
        assert!(smooth_centered(&s, 4).is_err());
        assert!(smooth_centered(&s, 1).is_err());
        assert!(smooth_centered(&s, 11).is_err());
    }

    #[test]
    fn fluctuation_examples() {
        let m = RotationSeries::from_values(Hemisphere::North, SeriesKind::Mean, 5, vec![7.0; 4]).unwrap();
        let same = RotationSeries::from_values(Hemisphere::North, SeriesKind::Smoothed, 5, vec![7.0; 4]).unwrap();
        assert_eq!(fluctuations(&m, &same).unwrap().values(), &[0.0; 4]);
        let lower = RotationSeries::from_values(Hemisphere::North, SeriesKind::Smoothed, 5, vec![2.0; 4]).unwrap();
        assert_eq!(fluctuations(&m, &lower).unwrap().values(), &[5.0; 4]);
        let shifted = RotationSeries::from_values(Hemisphere::North, SeriesKind::Smoothed, 6, vec![2.0; 4]).unwrap();
        assert!(matches!(fluctuations(&m, &shifted), Err(Error::Alignment(_))));
    }

    #[test]
    fn fluctuation_of_stationary_noise_has_zero_mean() {
        for seed in 0..20 {
            let x: Vec<f64> = lcg(seed, 600).into_iter().map(|v| 50.0 + 10.0 * v).collect();
            let s = RotationSeries::from_values(Hemisphere::South, SeriesKind::Mean, 1, x).unwrap();
            let f = fluctuations(&s, &smooth_centered(&s, 13).unwrap()).unwrap();
            let v: Vec<f64> = f.values().iter().copied().filter(|v| !v.is_nan()).collect();
            let n = v.len() as f64;
            let mean = v.iter().sum::<f64>() / n;
            let sd = (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
            assert!(mean.abs() < 2.0 * sd / n.sqrt(), "seed {seed}: {mean}");
        }
    }

    #[test]
    fn edges_propagate_into_fluctuations() {
        let s = RotationSeries::from_values(Hemisphere::North, SeriesKind::Mean, 1, vec![1.0; 20]).unwrap();
        let f = fluctuations(&s, &smooth_centered(&s, 13).unwrap()).unwrap();
        assert_eq!(f.valid_count(), 8);
        assert_eq!(f.flags()[0], Flag::Edge);
    }

    #[test]
    fn split_sign_examples() {
        let set = split_signs(&series(vec![-1.0, 0.0, 2.0]));
        assert_eq!(set.f_plus.values(), &[0.0, 0.0, 2.0]);
        assert_eq!(set.f_minus.values(), &[-1.0, 0.0, 0.0]);
        let neg = split_signs(&series(vec![-1.0, -3.0]));
        assert_eq!(neg.f_plus.values(), &[0.0, 0.0]);
    }

    #[test]
    fn csv_round_trip_keeps_flags() {
        let s = smooth_centered(&series(lcg(3, 20)), 5).unwrap();
        let back = RotationSeries::from_csv(&s.to_csv(), Hemisphere::North, SeriesKind::Smoothed).unwrap();
        assert_eq!(back.flags(), s.flags());
        assert_eq!(back.start_rotation(), s.start_rotation());
        for (a, b) in back.values().iter().zip(s.values()) {
            assert!(a == b || (a.is_nan() && b.is_nan()));
        }
    }

    proptest! {
        #[test]
        fn split_reconstructs_and_is_disjoint(v in prop::collection::vec(-1e6f64..1e6, 1..200)) {
            let set = split_signs(&series(v.clone()));
            for i in 0..v.len() {
                let (p, m) = (set.f_plus.values()[i], set.f_minus.values()[i]);
                prop_assert_eq!(p + m, v[i]);
                prop_assert_eq!(p * m, 0.0);
                prop_assert!(p >= 0.0 && m <= 0.0);
            }
        }

        #[test]
        fn smoothing_is_affine_equivariant(
            v in prop::collection::vec(-100f64..100.0, 13..80),
            a in -5f64..5.0,
            b in -50f64..50.0,
        ) {
            let base = smooth_centered(&series(v.clone()), 13).unwrap();
            let moved = smooth_centered(&series(v.iter().map(|x| a * x + b).collect()), 13).unwrap();
            for (x, y) in base.values().iter().zip(moved.values()) {
                if x.is_nan() { prop_assert!(y.is_nan()); continue; }
                prop_assert!((a * x + b - y).abs() < 1e-9);
            }
        }
    }
}
