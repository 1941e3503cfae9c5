//! Activity segmentation from monthly Wolf numbers.
//!
//! Months whose smoothed Wolf number exceeds the mean of the smoothed series
//! are high-activity; all others (ties included) are low-activity. Rotations
//! take the label of the month containing their midpoint. Cycle boundaries
//! are the rotations at which the smoothed series has its minima.

use std::fmt::{self, Write as _};
use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{CarringtonCalendar, Hemisphere, MonthlyWolfRecord, YearMonth};
use crate::timeseries::{Flag, RotationSeries, SeriesKind};

pub const WOLF_WINDOW: usize = 13;

/// Half-width of the neighbourhood in which a cycle minimum must be lowest.
pub const MINIMUM_NEIGHBOURHOOD: usize = 48;

/// Smallest separation between accepted cycle minima, in months.
pub const MIN_MINIMA_SEPARATION: usize = 96;

/// Accepted spacing of consecutive cycle boundaries, in rotations.
pub const CYCLE_LENGTH_ROTATIONS: std::ops::RangeInclusive<i64> = 120..=180;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmoothedWolf {
    pub first_month: YearMonth,
    /// `None` for the six months at each end.
    pub values: Vec<Option<f64>>,
}

impl SmoothedWolf {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn month(&self, index: usize) -> YearMonth {
        YearMonth::from_ordinal(self.first_month.ordinal() + index as i64)
    }

    pub fn index_of(&self, month: YearMonth) -> Option<usize> {
        let d = month.ordinal() - self.first_month.ordinal();
        (d >= 0 && (d as usize) < self.values.len()).then_some(d as usize)
    }

    pub fn value_at(&self, month: YearMonth) -> Option<f64> {
        self.index_of(month).and_then(|i| self.values[i])
    }

    pub fn valid_mean(&self) -> Option<f64> {
        let valid: Vec<f64> = self.values.iter().flatten().copied().collect();
        (!valid.is_empty()).then(|| valid.iter().sum::<f64>() / valid.len() as f64)
    }

    /// Months `first..=last`, clipped to the available range.
    pub fn restrict(&self, first: YearMonth, last: YearMonth) -> Result<SmoothedWolf> {
        let lo = (first.ordinal() - self.first_month.ordinal()).max(0) as usize;
        let hi = ((last.ordinal() - self.first_month.ordinal() + 1).max(0) as usize).min(self.len());
        if lo >= hi {
            return Err(Error::Coverage(format!("no smoothed Wolf months in {first}..={last}")));
        }
        Ok(SmoothedWolf {
            first_month: self.month(lo),
            values: self.values[lo..hi].to_vec(),
        })
    }
}

/// 13-month centered mean with half-weight end months.
pub fn smooth_wolf(monthly: &[MonthlyWolfRecord]) -> Result<SmoothedWolf> {
    if monthly.len() < WOLF_WINDOW {
        return Err(Error::Parameter(format!(
            "smoothing needs at least {WOLF_WINDOW} months, got {}",
            monthly.len()
        )));
    }
    for pair in monthly.windows(2) {
        if pair[1].month != pair[0].month.succ() {
            return Err(Error::Input(format!(
                "monthly Wolf series is not consecutive at {}",
                pair[1].month
            )));
        }
    }
    let r: Vec<f64> = monthly.iter().map(|m| m.wolf).collect();
    let half = WOLF_WINDOW / 2;
    let mut values = vec![None; r.len()];
    for m in half..r.len() - half {
        let inner: f64 = r[m - half + 1..m + half].iter().sum();
        values[m] = Some((inner + 0.5 * (r[m - half] + r[m + half])) / (WOLF_WINDOW - 1) as f64);
    }
    Ok(SmoothedWolf {
        first_month: monthly[0].month,
        values,
    })
}

/// Indices of cycle minima in ascending order.
///
/// A candidate is a valid month, not the first or last valid one, that is the
/// lowest value within ±48 months (earliest month on plateaus). Candidates are
/// accepted lowest first, skipping any within 96 months of an accepted one.
pub fn cycle_minima(smoothed: &[Option<f64>]) -> Result<Vec<usize>> {
    let valid: Vec<usize> = (0..smoothed.len()).filter(|&i| smoothed[i].is_some()).collect();
    if valid.len() < 24 {
        return Err(Error::InsufficientData {
            what: "smoothed Wolf months for minima",
            needed: 24,
            got: valid.len(),
        });
    }
    let (first, last) = (valid[0], valid[valid.len() - 1]);
    let mut candidates = Vec::new();
    for i in first + 1..last {
        let Some(v) = smoothed[i] else { continue };
        let lo = i.saturating_sub(MINIMUM_NEIGHBOURHOOD);
        let hi = (i + MINIMUM_NEIGHBOURHOOD).min(smoothed.len() - 1);
        let earlier_ok = smoothed[lo..i].iter().flatten().all(|&w| w > v);
        let later_ok = smoothed[i + 1..=hi].iter().flatten().all(|&w| w >= v);
        if earlier_ok && later_ok {
            candidates.push((v, i));
        }
    }
    candidates.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut accepted: Vec<usize> = Vec::new();
    for (_, i) in candidates {
        if accepted.iter().all(|&a| a.abs_diff(i) >= MIN_MINIMA_SEPARATION) {
            accepted.push(i);
        }
    }
    if accepted.is_empty() {
        return Err(Error::Segmentation("no cycle minimum found".into()));
    }
    accepted.sort_unstable();
    Ok(accepted)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Activity {
    High,
    Low,
}

impl Activity {
    pub fn code(self) -> &'static str {
        match self {
            Activity::High => "high",
            Activity::Low => "low",
        }
    }
}

impl fmt::Display for Activity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

/// Threshold (mean of valid smoothed values) and per-month labels; invalid
/// months are unlabeled.
pub fn label_months(smoothed: &[Option<f64>]) -> Result<(f64, Vec<Option<Activity>>)> {
    let valid: Vec<f64> = smoothed.iter().flatten().copied().collect();
    if valid.is_empty() {
        return Err(Error::EmptyInput("no valid smoothed Wolf values".into()));
    }
    let threshold = valid.iter().sum::<f64>() / valid.len() as f64;
    let labels = smoothed
        .iter()
        .map(|v| v.map(|v| if v > threshold { Activity::High } else { Activity::Low }))
        .collect();
    Ok((threshold, labels))
}

/// Month containing the midpoint of each rotation in `first..=last`.
#[derive(Debug, Clone, PartialEq)]
pub struct MonthRotationMap {
    first_rotation: i64,
    months: Vec<YearMonth>,
}

impl MonthRotationMap {
    pub fn new(calendar: &CarringtonCalendar, first_rotation: i64, last_rotation: i64) -> Result<Self> {
        if last_rotation < first_rotation || first_rotation < 1 {
            return Err(Error::Parameter(format!(
                "invalid rotation range {first_rotation}..={last_rotation}"
            )));
        }
        let months = (first_rotation..=last_rotation)
            .map(|r| YearMonth::of_instant(calendar.rotation_midpoint(r)))
            .collect();
        Ok(Self { first_rotation, months })
    }

    pub fn first_rotation(&self) -> i64 {
        self.first_rotation
    }

    pub fn last_rotation(&self) -> i64 {
        self.first_rotation + self.months.len() as i64 - 1
    }

    pub fn month_of(&self, rotation: i64) -> Option<YearMonth> {
        let i = rotation - self.first_rotation;
        (i >= 0).then(|| self.months.get(i as usize).copied()).flatten()
    }

    /// First rotation whose midpoint lies in `month` or later.
    pub fn first_rotation_in(&self, month: YearMonth) -> Option<i64> {
        self.months
            .iter()
            .position(|m| *m >= month)
            .map(|i| self.first_rotation + i as i64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActivityMask {
    pub start_rotation: i64,
    pub labels: Vec<Activity>,
    pub threshold: f64,
    /// Start rotations of consecutive cycles; the last entry closes the last
    /// cycle.
    pub cycle_boundaries: Vec<i64>,
    /// Number of the cycle starting at the first boundary.
    pub first_cycle: u32,
}

impl ActivityMask {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn end_rotation(&self) -> i64 {
        self.start_rotation + self.labels.len() as i64 - 1
    }

    pub fn label_of(&self, rotation: i64) -> Option<Activity> {
        let i = rotation - self.start_rotation;
        (i >= 0).then(|| self.labels.get(i as usize).copied()).flatten()
    }

    pub fn count(&self, activity: Activity) -> usize {
        self.labels.iter().filter(|l| **l == activity).count()
    }

    pub fn n_cycles(&self) -> usize {
        self.cycle_boundaries.len().saturating_sub(1)
    }

    /// Cycle number containing `rotation`, with cycles as `[b_j, b_{j+1})`.
    pub fn cycle_of(&self, rotation: i64) -> Option<u32> {
        self.cycle_boundaries
            .windows(2)
            .position(|b| b[0] <= rotation && rotation < b[1])
            .map(|j| self.first_cycle + j as u32)
    }

    pub fn with_cycle_boundaries(mut self, boundaries: Vec<i64>, first_cycle: u32) -> Result<Self> {
        for pair in boundaries.windows(2) {
            let gap = pair[1] - pair[0];
            if !CYCLE_LENGTH_ROTATIONS.contains(&gap) {
                return Err(Error::Segmentation(format!(
                    "cycle boundaries {} and {} are {gap} rotations apart (expected {}..={})",
                    pair[0],
                    pair[1],
                    CYCLE_LENGTH_ROTATIONS.start(),
                    CYCLE_LENGTH_ROTATIONS.end()
                )));
            }
        }
        self.cycle_boundaries = boundaries;
        self.first_cycle = first_cycle;
        Ok(self)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("rotation,label,cycle\n");
        for (i, label) in self.labels.iter().enumerate() {
            let r = self.start_rotation + i as i64;
            let cycle = self.cycle_of(r).map(|c| c.to_string()).unwrap_or_default();
            let _ = writeln!(s, "{r},{label},{cycle}");
        }
        s
    }
}

/// Labels every rotation of `map` from the month containing its midpoint.
/// The threshold is the mean of all valid values of `smoothed`.
pub fn activity_mask(smoothed: &SmoothedWolf, map: &MonthRotationMap) -> Result<ActivityMask> {
    let (threshold, month_labels) = label_months(&smoothed.values)?;
    let mut labels = Vec::with_capacity(map.months.len());
    for (i, month) in map.months.iter().enumerate() {
        let label = smoothed
            .index_of(*month)
            .and_then(|m| month_labels[m])
            .ok_or_else(|| {
                Error::Coverage(format!(
                    "rotation {} (midpoint month {month}) has no smoothed Wolf value",
                    map.first_rotation + i as i64
                ))
            })?;
        labels.push(label);
    }
    Ok(ActivityMask {
        start_rotation: map.first_rotation,
        labels,
        threshold,
        cycle_boundaries: Vec::new(),
        first_cycle: 0,
    })
}

/// A concatenation of non-adjacent pieces of a rotation series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentedSeries {
    pub hemisphere: Hemisphere,
    pub kind: SeriesKind,
    pub rotations: Vec<i64>,
    /// NaN where the source position is invalid.
    pub values: Vec<f64>,
    pub flags: Vec<Flag>,
    /// Indices at which a new contiguous piece starts (excluding 0).
    pub seams: Vec<usize>,
}

impl SegmentedSeries {
    fn empty(hemisphere: Hemisphere, kind: SeriesKind) -> Self {
        Self {
            hemisphere,
            kind,
            rotations: Vec::new(),
            values: Vec::new(),
            flags: Vec::new(),
            seams: Vec::new(),
        }
    }

    fn push(&mut self, rotation: i64, value: f64, flag: Flag) {
        if let Some(&prev) = self.rotations.last() {
            if rotation != prev + 1 {
                self.seams.push(self.rotations.len());
            }
        }
        self.rotations.push(rotation);
        self.values.push(value);
        self.flags.push(flag);
    }

    pub fn len(&self) -> usize {
        self.rotations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rotations.is_empty()
    }

    pub fn valid_count(&self) -> usize {
        self.flags.iter().filter(|f| f.is_valid()).count()
    }

    pub fn pieces(&self) -> Vec<Range<usize>> {
        let mut bounds = vec![0];
        bounds.extend(&self.seams);
        bounds.push(self.len());
        bounds.windows(2).filter(|b| b[0] < b[1]).map(|b| b[0]..b[1]).collect()
    }

    /// Each contiguous piece as its own rotation series.
    pub fn piece_series(&self) -> Result<Vec<RotationSeries>> {
        self.pieces()
            .into_iter()
            .map(|r| {
                RotationSeries::new(
                    self.hemisphere,
                    self.kind,
                    self.rotations[r.start],
                    self.values[r.clone()].to_vec(),
                    self.flags[r].to_vec(),
                )
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaskSplit {
    pub high: SegmentedSeries,
    pub low: SegmentedSeries,
}

impl MaskSplit {
    pub fn get(&self, activity: Activity) -> &SegmentedSeries {
        match activity {
            Activity::High => &self.high,
            Activity::Low => &self.low,
        }
    }
}

fn check_mask_alignment(series: &RotationSeries, mask: &ActivityMask) -> Result<()> {
    if series.start_rotation() != mask.start_rotation || series.len() != mask.len() {
        return Err(Error::Alignment(format!(
            "series {}..={} vs mask {}..={}",
            series.start_rotation(),
            series.end_rotation(),
            mask.start_rotation,
            mask.end_rotation()
        )));
    }
    Ok(())
}

/// Splits `series` into its high- and low-activity rotations, each kept in
/// time order.
pub fn split_by_mask(series: &RotationSeries, mask: &ActivityMask) -> Result<MaskSplit> {
    check_mask_alignment(series, mask)?;
    let mut high = SegmentedSeries::empty(series.hemisphere, series.kind);
    let mut low = SegmentedSeries::empty(series.hemisphere, series.kind);
    for (i, rotation) in series.rotations().enumerate() {
        let target = match mask.labels[i] {
            Activity::High => &mut high,
            Activity::Low => &mut low,
        };
        target.push(rotation, series.values()[i], series.flags()[i]);
    }
    Ok(MaskSplit { high, low })
}

/// One part per cycle, `[b_j, b_{j+1})`.
pub fn split_by_cycle(series: &RotationSeries, mask: &ActivityMask) -> Result<Vec<RotationSeries>> {
    let b = &mask.cycle_boundaries;
    if b.len() < 2 {
        return Err(Error::Segmentation("fewer than two cycle boundaries".into()));
    }
    let (first, last) = (b[0], b[b.len() - 1]);
    if first < series.start_rotation() || last - 1 > series.end_rotation() {
        return Err(Error::Segmentation(format!(
            "cycle boundaries {first}..{last} exceed series {}..={}",
            series.start_rotation(),
            series.end_rotation()
        )));
    }
    b.windows(2)
        .map(|pair| series.slice_rotations(pair[0], pair[1] - 1))
        .collect()
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    fn records(start: YearMonth, values: &[f64]) -> Vec<MonthlyWolfRecord> {
        values
            .iter()
            .enumerate()
            .map(|(i, &wolf)| MonthlyWolfRecord {
                month: YearMonth::from_ordinal(start.ordinal() + i as i64),
                wolf,
            })
            .collect()
    }

    fn ym(y: i32, m: u32) -> YearMonth {
        YearMonth::new(y, m).unwrap()
    }

    fn lcg(seed: u64, n: usize) -> Vec<f64> {
        let mut s = seed;
        (0..n)
            .map(|_| {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                (s >> 11) as f64 / (1u64 << 53) as f64 * 200.0
            })
            .collect()
    }

    #[test]
    fn smoothing_constant_and_ramp() {
        let s = smooth_wolf(&records(ym(1900, 1), &[7.0; 30])).unwrap();
        assert!(s.values[..6].iter().all(Option::is_none));
        assert!(s.values[24..].iter().all(Option::is_none));
        assert!(s.values[6..24].iter().all(|v| (v.unwrap() - 7.0).abs() < 1e-12));

        let ramp: Vec<f64> = (0..40).map(|i| 3.0 + 2.5 * i as f64).collect();
        let s = smooth_wolf(&records(ym(1900, 1), &ramp)).unwrap();
        for m in 6..34 {
            assert!((s.values[m].unwrap() - ramp[m]).abs() < 1e-12);
        }
    }

    #[test]
    fn smoothing_matches_weighted_sum() {
        let r = lcg(3, 80);
        let s = smooth_wolf(&records(ym(1900, 1), &r)).unwrap();
        for m in 6..74 {
            let mut acc = 0.0;
            for (j, k) in (m - 6..=m + 6).enumerate() {
                let w = if j == 0 || j == 12 { 1.0 / 24.0 } else { 1.0 / 12.0 };
                acc += w * r[k];
            }
            assert!((s.values[m].unwrap() - acc).abs() < 1e-12);
        }
    }

    #[test]
    fn smoothing_errors() {
        assert!(matches!(
            smooth_wolf(&records(ym(1900, 1), &[1.0; 12])),
            Err(Error::Parameter(_))
        ));
        let mut recs = records(ym(1900, 1), &[1.0; 20]);
        recs.remove(5);
        assert!(smooth_wolf(&recs).is_err());
    }

    #[test]
    fn single_valley_vertex() {
        let v: Vec<Option<f64>> = (0..100).map(|i| Some(((i as f64) - 41.0).powi(2))).collect();
        assert_eq!(cycle_minima(&v).unwrap(), vec![41]);
    }

    #[test]
    fn two_valleys_in_order() {
        let v: Vec<Option<f64>> = (0..250)
            .map(|i| Some(100.0 - 90.0 * (std::f64::consts::PI * (i as f64 - 30.0) / 132.0).sin().powi(2)))
            .map(|v| v.map(|x| 110.0 - x))
            .collect();
        assert_eq!(cycle_minima(&v).unwrap(), vec![30, 162]);
    }

    #[test]
    fn plateau_takes_earliest_and_edges_are_ignored() {
        let mut v: Vec<Option<f64>> = (0..120).map(|i| Some(((i as f64) - 60.0).abs() + 5.0)).collect();
        for x in v.iter_mut().take(64).skip(58) {
            *x = Some(5.0);
        }
        v[..6].fill(None);
        assert_eq!(cycle_minima(&v).unwrap(), vec![58]);

        let falling: Vec<Option<f64>> = (0..60).map(|i| Some(100.0 - i as f64)).collect();
        assert!(matches!(cycle_minima(&falling), Err(Error::Segmentation(_))));
    }

    #[test]
    fn close_minima_keep_the_lower() {
        let mut v: Vec<Option<f64>> = vec![Some(50.0); 200];
        v[60] = Some(3.0);
        v[120] = Some(2.0);
        assert_eq!(cycle_minima(&v).unwrap(), vec![120]);
    }

    #[test]
    fn label_rule() {
        let (t, l) = label_months(&[Some(1.0), Some(1.0), Some(9.0), Some(9.0)]).unwrap();
        assert_eq!(t, 5.0);
        assert_eq!(l, vec![Some(Activity::Low), Some(Activity::Low), Some(Activity::High), Some(Activity::High)]);
        let (_, l) = label_months(&[Some(4.0); 5]).unwrap();
        assert!(l.iter().all(|x| *x == Some(Activity::Low)));
        assert!(label_months(&[None, None]).is_err());
    }

    fn mask(labels: Vec<Activity>, start: i64) -> ActivityMask {
        ActivityMask {
            start_rotation: start,
            labels,
            threshold: 0.0,
            cycle_boundaries: Vec::new(),
            first_cycle: 12,
        }
    }

    fn series(start: i64, values: Vec<f64>) -> RotationSeries {
        RotationSeries::from_values(Hemisphere::North, SeriesKind::Stabilized, start, values).unwrap()
    }

    #[test]
    fn split_alternating() {
        use Activity::{High, Low};
        let s = split_by_mask(&series(10, vec![1.0, 2.0, 3.0, 4.0]), &mask(vec![High, Low, High, Low], 10)).unwrap();
        assert_eq!(s.high.values, vec![1.0, 3.0]);
        assert_eq!(s.low.values, vec![2.0, 4.0]);
        assert_eq!(s.high.rotations, vec![10, 12]);
        assert_eq!(s.high.seams, vec![1]);

        let all = split_by_mask(&series(10, vec![1.0, 2.0, 3.0]), &mask(vec![High; 3], 10)).unwrap();
        assert_eq!(all.high.values, vec![1.0, 2.0, 3.0]);
        assert!(all.high.seams.is_empty());
        assert!(all.low.is_empty());
        assert!(split_by_mask(&series(11, vec![1.0; 3]), &mask(vec![High; 3], 10)).is_err());
    }

    #[test]
    fn pieces_are_contiguous_runs() {
        use Activity::{High, Low};
        let labels = vec![High, High, Low, Low, Low, High, Low, High, High];
        let s = split_by_mask(&series(1, (0..9).map(f64::from).collect()), &mask(labels, 1)).unwrap();
        assert_eq!(s.high.pieces(), vec![0..2, 2..3, 3..5]);
        let parts = s.low.piece_series().unwrap();
        assert_eq!(parts.len(), 2);
        assert_eq!(parts[0].start_rotation(), 3);
        assert_eq!(parts[1].values(), &[6.0]);
    }

    #[test]
    fn cycle_split() {
        let s = series(0, (0..280).map(f64::from).collect());
        let m = mask(vec![Activity::Low; 280], 0).with_cycle_boundaries(vec![0, 140, 280], 12).unwrap();
        let parts = split_by_cycle(&s, &m).unwrap();
        assert_eq!(parts.iter().map(|p| p.len()).collect::<Vec<_>>(), vec![140, 140]);
        let joined: Vec<f64> = parts.iter().flat_map(|p| p.values().to_vec()).collect();
        assert_eq!(joined, s.values());
        assert_eq!(m.cycle_of(139), Some(12));
        assert_eq!(m.cycle_of(140), Some(13));
        assert_eq!(m.cycle_of(280), None);

        let wide = mask(vec![Activity::Low; 280], 0).with_cycle_boundaries(vec![0, 140, 290], 12).unwrap();
        assert!(split_by_cycle(&s, &wide).is_err());
        assert!(mask(vec![], 0).with_cycle_boundaries(vec![0, 100], 12).is_err());
    }

    #[test]
    fn rotation_map_and_mask() {
        let cal = CarringtonCalendar::standard();
        let smoothed = smooth_wolf(&records(
            ym(1900, 1),
            &(0..60).map(|i| if (20..40).contains(&i) { 100.0 } else { 10.0 }).collect::<Vec<_>>(),
        ))
        .unwrap();
        let r0 = cal.rotation_of(ym(1901, 1).first_day()).unwrap();
        let map = MonthRotationMap::new(&cal, r0, r0 + 20).unwrap();
        for r in r0..=r0 + 20 {
            let m = map.month_of(r).unwrap();
            let mid = cal.rotation_midpoint(r);
            assert_eq!(m, YearMonth::of_instant(mid));
        }
        let m = activity_mask(&smoothed, &map).unwrap();
        assert_eq!(m.len(), 21);
        assert!((m.threshold - smoothed.valid_mean().unwrap()).abs() < 1e-12);
        for r in r0..=r0 + 20 {
            let month = map.month_of(r).unwrap();
            let expect = if smoothed.value_at(month).unwrap() > m.threshold { Activity::High } else { Activity::Low };
            assert_eq!(m.label_of(r), Some(expect));
        }
        assert!(m.to_csv().starts_with("rotation,label,cycle\n"));

        let far = MonthRotationMap::new(&cal, r0 + 100, r0 + 110).unwrap();
        assert!(matches!(activity_mask(&smoothed, &far), Err(Error::Coverage(_))));
    }

    proptest! {
        #[test]
        fn mask_split_partitions(labels in prop::collection::vec(any::<bool>(), 1..200)) {
            let n = labels.len();
            let labels: Vec<Activity> = labels.into_iter().map(|b| if b { Activity::High } else { Activity::Low }).collect();
            let s = series(5, (0..n).map(|i| i as f64).collect());
            let split = split_by_mask(&s, &mask(labels.clone(), 5)).unwrap();
            prop_assert_eq!(split.high.len() + split.low.len(), n);
            let mut merged: Vec<(i64, f64)> = split.high.rotations.iter().copied().zip(split.high.values.iter().copied())
                .chain(split.low.rotations.iter().copied().zip(split.low.values.iter().copied()))
                .collect();
            merged.sort_by_key(|p| p.0);
            for (i, (r, v)) in merged.into_iter().enumerate() {
                prop_assert_eq!(r, 5 + i as i64);
                prop_assert_eq!(v, i as f64);
            }
        }

        #[test]
        fn relabel_stable_under_offset(seed in 0u64..1000, c in 0.0f64..500.0) {
            let r = lcg(seed, 120);
            let a = smooth_wolf(&records(ym(1900, 1), &r)).unwrap();
            let shifted: Vec<f64> = r.iter().map(|v| v + c).collect();
            let b = smooth_wolf(&records(ym(1900, 1), &shifted)).unwrap();
            let (ta, la) = label_months(&a.values).unwrap();
            let (tb, lb) = label_months(&b.values).unwrap();
            prop_assert!((tb - ta - c).abs() < 1e-9);
            prop_assert_eq!(la, lb);
        }
    }
}
