//! Variance stabilization of fluctuation series.
//!
//! The local amplitude of the fluctuations is modelled as a power law of the
//! smoothed activity, `σ_local = A·S̄^k`, fitted by least squares in log–log
//! space (natural logarithms). The stabilized series is `X = F / S̄^k`.
//! `σ_local` is the centered `u`-window standard deviation with divisor `u`.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, FisherSnedecor};

use crate::error::{Error, Result};
use crate::timeseries::{Flag, RotationSeries, SeriesKind};

/// Fewest regression points accepted by [`fit_amplitude_model`].
pub const MIN_FIT_POINTS: usize = 30;

/// Significance level for the F-test on `k`.
pub const K_SIGNIFICANCE: f64 = 0.05;

pub const DEFAULT_U_CANDIDATES: [usize; 6] = [7, 9, 11, 13, 15, 17];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilizationFit {
    pub u: usize,
    pub k: f64,
    pub log_a: f64,
    pub k_stderr: f64,
    pub f_statistic: f64,
    pub p_value: f64,
    /// Points entering the regression.
    pub n_points: usize,
    /// Interior positions dropped because `S̄ ≤ 0` or the local std is 0.
    pub n_excluded: usize,
}

impl StabilizationFit {
    pub fn k_is_significant(&self) -> bool {
        self.p_value < K_SIGNIFICANCE
    }
}

fn check_u(u: usize) -> Result<()> {
    if u < 3 || u % 2 == 0 {
        return Err(Error::Parameter(format!("window u must be odd and >= 3, got {u}")));
    }
    Ok(())
}

fn population_std(window: &[f64]) -> f64 {
    let n = window.len() as f64;
    let mean = window.iter().sum::<f64>() / n;
    (window.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt()
}

/// Centered `u`-window standard deviation (divisor `u`). Windows touching an
/// invalid position yield an invalid position.
pub fn local_std(f: &RotationSeries, u: usize) -> Result<RotationSeries> {
    check_u(u)?;
    let valid = f.valid_count();
    if u > valid {
        return Err(Error::Parameter(format!(
            "window u = {u} exceeds the {valid} valid positions"
        )));
    }
    let half = u / 2;
    let n = f.len();
    let mut values = vec![f64::NAN; n];
    let mut flags = vec![Flag::Edge; n];
    for i in half..n.saturating_sub(half) {
        let win = i - half..=i + half;
        if f.flags()[win.clone()].iter().all(|fl| fl.is_valid()) {
            values[i] = population_std(&f.values()[win]);
            flags[i] = Flag::Ok;
        } else {
            flags[i] = Flag::Missing;
        }
    }
    RotationSeries::new(f.hemisphere, f.kind, f.start_rotation(), values, flags)
}

fn check_aligned(f: &RotationSeries, smoothed: &RotationSeries) -> Result<()> {
    if f.start_rotation() != smoothed.start_rotation() || f.len() != smoothed.len() {
        return Err(Error::Alignment(format!(
            "fluctuations {}..={} vs smoothed {}..={}",
            f.start_rotation(),
            f.end_rotation(),
            smoothed.start_rotation(),
            smoothed.end_rotation()
        )));
    }
    Ok(())
}

/// Least-squares fit of `ln σ_local = ln A + k·ln S̄` with the regression
/// F-test for `k`.
pub fn fit_amplitude_model(f: &RotationSeries, smoothed: &RotationSeries, u: usize) -> Result<StabilizationFit> {
    check_u(u)?;
    check_aligned(f, smoothed)?;
    let valid = f.valid_count();
    if valid < 10 * u {
        return Err(Error::InsufficientData {
            what: "amplitude fit (10·u valid rotations)",
            needed: 10 * u,
            got: valid,
        });
    }
    let sigma = local_std(f, u)?;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut excluded = 0;
    for i in 0..f.len() {
        if !(sigma.is_valid(i) && smoothed.is_valid(i)) {
            continue;
        }
        let (s, level) = (sigma.values()[i], smoothed.values()[i]);
        if s > 0.0 && level > 0.0 {
            xs.push(level.ln());
            ys.push(s.ln());
        } else {
            excluded += 1;
        }
    }
    let n = xs.len();
    if n < MIN_FIT_POINTS {
        return Err(Error::InsufficientData {
            what: "amplitude fit points",
            needed: MIN_FIT_POINTS,
            got: n,
        });
    }
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if !(sxx > 1e-12 * nf) {
        return Err(Error::Degenerate("smoothed activity has no spread in log space".into()));
    }
    let k = sxy / sxx;
    let log_a = my - k * mx;
    let sse: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - log_a - k * x).powi(2))
        .sum();
    let ssr = k * k * sxx;
    let dof = nf - 2.0;
    let mse = sse / dof;
    let (f_statistic, p_value) = if mse > 0.0 {
        let fs = ssr / mse;
        let dist = FisherSnedecor::new(1.0, dof).map_err(|e| Error::Degenerate(e.to_string()))?;
        (fs, dist.sf(fs).clamp(0.0, 1.0))
    } else {
        (f64::INFINITY, 0.0)
    };
    Ok(StabilizationFit {
        u,
        k,
        log_a,
        k_stderr: (mse / sxx).sqrt(),
        f_statistic,
        p_value,
        n_points: n,
        n_excluded: excluded,
    })
}

/// `X_i = F_i / S̄_i^k`; positions with `S̄ ≤ 0` become [`Flag::Undefined`].
pub fn stabilize(f: &RotationSeries, smoothed: &RotationSeries, fit: &StabilizationFit) -> Result<RotationSeries> {
    check_aligned(f, smoothed)?;
    let mut values = Vec::with_capacity(f.len());
    let mut flags = Vec::with_capacity(f.len());
    for i in 0..f.len() {
        let (fi, si) = (f.values()[i], smoothed.values()[i]);
        if !f.is_valid(i) {
            values.push(f64::NAN);
            flags.push(f.flags()[i]);
        } else if !smoothed.is_valid(i) {
            values.push(f64::NAN);
            flags.push(smoothed.flags()[i]);
        } else if si <= 0.0 {
            values.push(f64::NAN);
            flags.push(Flag::Undefined);
        } else {
            values.push(fi / si.powf(fit.k));
            flags.push(f.flags()[i]);
        }
    }
    RotationSeries::new(f.hemisphere, SeriesKind::Stabilized, f.start_rotation(), values, flags)
}

/// Standard deviations (divisor = window) of consecutive non-overlapping
/// windows over the valid span; windows containing invalid positions are
/// skipped.
pub fn block_stds(x: &RotationSeries, window: usize) -> Vec<f64> {
    let Some(span) = x.valid_span() else {
        return Vec::new();
    };
    let vals = &x.values()[span.clone()];
    let flags = &x.flags()[span];
    vals.chunks_exact(window)
        .zip(flags.chunks_exact(window))
        .filter(|(_, f)| f.iter().all(|fl| fl.is_valid()))
        .map(|(v, _)| population_std(v))
        .collect()
}

/// max/min of [`block_stds`]; `None` with fewer than two windows or a zero
/// minimum.
pub fn windowed_std_ratio(x: &RotationSeries, window: usize) -> Option<f64> {
    let stds = block_stds(x, window);
    if stds.len() < 2 {
        return None;
    }
    let max = stds.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = stds.iter().copied().fold(f64::INFINITY, f64::min);
    (min > 0.0).then(|| max / min)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionOptions {
    /// Block length for the flatness statistic, fixed across candidates.
    pub flatness_window: usize,
    /// Candidates within this relative margin of the best flatness tie.
    pub tie_tolerance: f64,
    /// Ties go to the candidate closest to this window.
    pub preferred_u: usize,
}

impl Default for SelectionOptions {
    fn default() -> Self {
        Self {
            flatness_window: 39,
            tie_tolerance: 0.10,
            preferred_u: 13,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateScore {
    pub u: usize,
    /// max/min windowed variance of the stabilized series.
    pub flatness: Option<f64>,
    pub k: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct USelection {
    pub u: usize,
    pub fit: StabilizationFit,
    pub candidates: Vec<CandidateScore>,
}

/// Picks the window `u` whose fit leaves the flattest stabilized variance.
pub fn select_u(
    f: &RotationSeries,
    smoothed: &RotationSeries,
    candidates: &[usize],
    options: &SelectionOptions,
) -> Result<USelection> {
    if candidates.is_empty() {
        return Err(Error::Parameter("no candidate windows".into()));
    }
    let mut scores = Vec::with_capacity(candidates.len());
    let mut fits = Vec::with_capacity(candidates.len());
    let mut first_error = None;
    for &u in candidates {
        let attempt = fit_amplitude_model(f, smoothed, u).and_then(|fit| {
            let x = stabilize(f, smoothed, &fit)?;
            let ratio = windowed_std_ratio(&x, options.flatness_window).ok_or(Error::InsufficientData {
                what: "flatness windows",
                needed: 2,
                got: block_stds(&x, options.flatness_window).len(),
            })?;
            Ok((fit, ratio * ratio))
        });
        match attempt {
            Ok((fit, flatness)) => {
                scores.push(CandidateScore {
                    u,
                    flatness: Some(flatness),
                    k: Some(fit.k),
                    error: None,
                });
                fits.push(Some(fit));
            }
            Err(e) => {
                scores.push(CandidateScore {
                    u,
                    flatness: None,
                    k: None,
                    error: Some(e.to_string()),
                });
                fits.push(None);
                first_error.get_or_insert(e);
            }
        }
    }
    let best = scores
        .iter()
        .filter_map(|s| s.flatness)
        .fold(f64::INFINITY, f64::min);
    if !best.is_finite() {
        return Err(first_error.expect("at least one candidate failed"));
    }
    let limit = best * (1.0 + options.tie_tolerance);
    let chosen = scores
        .iter()
        .enumerate()
        .filter(|(_, s)| s.flatness.is_some_and(|v| v <= limit))
        .min_by_key(|(_, s)| (s.u.abs_diff(options.preferred_u), s.u))
        .map(|(i, _)| i)
        .expect("best candidate is within its own tolerance");
    Ok(USelection {
        u: scores[chosen].u,
        fit: fits[chosen].clone().expect("scored candidates have fits"),
        candidates: scores,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationarityReport {
    pub window: usize,
    pub stride: usize,
    pub window_centers: Vec<i64>,
    pub windowed_means: Vec<f64>,
    pub windowed_stds: Vec<f64>,
    pub grand_mean: f64,
    pub grand_std_of_means: f64,
    pub grand_mean_std: f64,
    pub grand_std_of_stds: f64,
    pub frac_means_in_1sigma: f64,
    pub frac_stds_in_2sigma: f64,
}

impl StationarityReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("center_rotation,mean,std\n");
        for ((c, m), sd) in self
            .window_centers
            .iter()
            .zip(&self.windowed_means)
            .zip(&self.windowed_stds)
        {
            let _ = writeln!(s, "{c},{m},{sd}");
        }
        s
    }
}

fn mean_and_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    (mean, (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt())
}

/// Windowed means and standard deviations of `x` at centers
/// `⌈u/2⌉, ⌈u/2⌉ + stride, …` (1-based within the valid span), and the
/// fraction of windows whose mean lies in `grand_mean ± σ̂_means` and whose
/// std lies in `grand_mean_std ± 2σ̂_stds` (closed intervals).
pub fn stationarity_report(x: &RotationSeries, u: usize, stride: usize) -> Result<StationarityReport> {
    check_u(u)?;
    if stride == 0 {
        return Err(Error::Parameter("stride must be positive".into()));
    }
    let span = x.valid_span().ok_or_else(|| Error::EmptyInput("no valid values".into()))?;
    let len = span.end() - span.start() + 1;
    if len < 3 * u {
        return Err(Error::InsufficientData {
            what: "stationarity report (3·u valid rotations)",
            needed: 3 * u,
            got: len,
        });
    }
    let half = u / 2;
    let mut centers = Vec::new();
    let mut means = Vec::new();
    let mut stds = Vec::new();
    let mut c = span.start() + half;
    while c + half <= *span.end() {
        let win = c - half..=c + half;
        if x.flags()[win.clone()].iter().all(|f| f.is_valid()) {
            let (m, s) = mean_and_std(&x.values()[win]);
            centers.push(x.start_rotation() + c as i64);
            means.push(m);
            stds.push(s);
        }
        c += stride;
    }
    if means.len() < 3 {
        return Err(Error::InsufficientData {
            what: "stationarity windows",
            needed: 3,
            got: means.len(),
        });
    }
    let (grand_mean, grand_std_of_means) = mean_and_std(&means);
    let (grand_mean_std, grand_std_of_stds) = mean_and_std(&stds);
    let within = |v: &[f64], center: f64, half_width: f64| {
        v.iter().filter(|x| (**x - center).abs() <= half_width).count() as f64 / v.len() as f64
    };
    Ok(StationarityReport {
        window: u,
        stride,
        frac_means_in_1sigma: within(&means, grand_mean, grand_std_of_means),
        frac_stds_in_2sigma: within(&stds, grand_mean_std, 2.0 * grand_std_of_stds),
        window_centers: centers,
        windowed_means: means,
        windowed_stds: stds,
        grand_mean,
        grand_std_of_means,
        grand_mean_std,
        grand_std_of_stds,
    })
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use proptest::prelude::*;

    use super::*;
    use crate::ingest::Hemisphere;
    use crate::synth::{generate_values, heteroscedastic, SynthKind, SynthSpec};

    fn series(kind: SeriesKind, values: Vec<f64>) -> RotationSeries {
        RotationSeries::from_values(Hemisphere::North, kind, 1, values).unwrap()
    }

    /// Activity level spanning about a decade with an ~11-year cycle.
    fn cycle_envelope(n: usize) -> RotationSeries {
        let v = (0..n)
            .map(|i| 20.0 + 300.0 * (PI * i as f64 / 147.0).sin().powi(2))
            .collect();
        series(SeriesKind::Smoothed, v)
    }

    /// One slow rise and fall from 10 to 1000 over the whole record.
    fn slow_envelope(n: usize) -> RotationSeries {
        let v = (0..n)
            .map(|i| 10.0 * 100f64.powf((1.0 - (2.0 * PI * i as f64 / n as f64).cos()) / 2.0))
            .collect();
        series(SeriesKind::Smoothed, v)
    }

    #[test]
    fn local_std_constant_is_zero() {
        let s = local_std(&series(SeriesKind::Fluctuation, vec![4.0; 40]), 13).unwrap();
        for i in 6..34 {
            assert_eq!(s.values()[i], 0.0);
        }
        assert_eq!(s.flags()[5], Flag::Edge);
    }

    #[test]
    fn local_std_alternating() {
        let v = (0..60).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let s = local_std(&series(SeriesKind::Fluctuation, v), 13).unwrap();
        // 13 alternating values: mean ±1/13, mean square 1
        let expected = (1.0 - 1.0 / 169.0f64).sqrt();
        for i in 6..54 {
            assert!((s.values()[i] - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn local_std_matches_direct_sum() {
        let v = generate_values(&SynthSpec::new(120, 2, SynthKind::White)).unwrap();
        let s = local_std(&series(SeriesKind::Fluctuation, v.clone()), 9).unwrap();
        for i in 4..116 {
            let mut sum = 0.0;
            for j in i - 4..=i + 4 {
                sum += v[j];
            }
            let mean = sum / 9.0;
            let mut ss = 0.0;
            for j in i - 4..=i + 4 {
                ss += (v[j] - mean) * (v[j] - mean);
            }
            assert!((s.values()[i] - (ss / 9.0).sqrt()).abs() < 1e-12);
        }
    }

    #[test]
    fn local_std_rejects_large_window() {
        assert!(local_std(&series(SeriesKind::Fluctuation, vec![1.0; 10]), 11).is_err());
        assert!(local_std(&series(SeriesKind::Fluctuation, vec![1.0; 10]), 4).is_err());
    }

    #[test]
    fn recovers_square_root_law() {
        let env = cycle_envelope(1700);
        let f = heteroscedastic(&SynthSpec::new(1700, 21, SynthKind::White), &env, 0.5).unwrap();
        let fit = fit_amplitude_model(&f, &env, 13).unwrap();
        assert!((fit.k - 0.5).abs() < 0.05, "k = {}", fit.k);
        assert!(fit.k_is_significant());
    }

    #[test]
    fn recovers_k_from_cycle_envelope() {
        let env = cycle_envelope(1700);
        for seed in 0..10 {
            let f = heteroscedastic(&SynthSpec::new(1700, seed, SynthKind::White), &env, 0.7).unwrap();
            let fit = fit_amplitude_model(&f, &env, 13).unwrap();
            assert!((fit.k - 0.7).abs() < 0.07, "seed {seed}: k = {}", fit.k);
        }
    }

    #[test]
    fn null_model_gives_small_k() {
        let env = cycle_envelope(1700);
        let f = heteroscedastic(&SynthSpec::new(1700, 5, SynthKind::White), &env, 0.0).unwrap();
        let fit = fit_amplitude_model(&f, &env, 13).unwrap();
        assert!(fit.k.abs() < 2.0 * fit.k_stderr, "k = {} ± {}", fit.k, fit.k_stderr);
    }

    #[test]
    fn fit_scaling_equivariance() {
        let env = cycle_envelope(800);
        let f = heteroscedastic(&SynthSpec::new(800, 3, SynthKind::White), &env, 0.6).unwrap();
        let scaled = f.map_valid(SeriesKind::Fluctuation, |v| 7.5 * v).unwrap();
        let a = fit_amplitude_model(&f, &env, 13).unwrap();
        let b = fit_amplitude_model(&scaled, &env, 13).unwrap();
        assert!((a.k - b.k).abs() < 1e-10);
        assert!((b.log_a - a.log_a - 7.5f64.ln()).abs() < 1e-10);
    }

    #[test]
    fn f_statistic_matches_correlation_form() {
        let env = cycle_envelope(600);
        let f = heteroscedastic(&SynthSpec::new(600, 12, SynthKind::White), &env, 0.4).unwrap();
        let fit = fit_amplitude_model(&f, &env, 11).unwrap();
        // independent route: F = r²/(1-r²)·(n-2) from the sample correlation
        let sigma = local_std(&f, 11).unwrap();
        let pts: Vec<(f64, f64)> = (0..600)
            .filter(|&i| sigma.is_valid(i))
            .map(|i| (env.values()[i].ln(), sigma.values()[i].ln()))
            .collect();
        let n = pts.len() as f64;
        let (sx, sy) = pts.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
        let (mx, my) = (sx / n, sy / n);
        let cov: f64 = pts.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
        let vx: f64 = pts.iter().map(|(x, _)| (x - mx).powi(2)).sum();
        let vy: f64 = pts.iter().map(|(_, y)| (y - my).powi(2)).sum();
        let r2 = cov * cov / (vx * vy);
        let f_oracle = r2 / (1.0 - r2) * (n - 2.0);
        assert_eq!(fit.n_points, pts.len());
        assert!((fit.f_statistic - f_oracle).abs() / f_oracle < 1e-10);
    }

    #[test]
    fn fit_error_paths() {
        let f = series(SeriesKind::Fluctuation, vec![1.0; 100]);
        let env = series(SeriesKind::Smoothed, vec![5.0; 100]);
        assert!(matches!(
            fit_amplitude_model(&f, &env, 13),
            Err(Error::InsufficientData { .. })
        ));
        let noise = series(SeriesKind::Fluctuation, generate_values(&SynthSpec::new(300, 1, SynthKind::White)).unwrap());
        let flat = series(SeriesKind::Smoothed, vec![5.0; 300]);
        assert!(matches!(fit_amplitude_model(&noise, &flat, 13), Err(Error::Degenerate(_))));
        let nonpositive = series(SeriesKind::Smoothed, vec![0.0; 300]);
        assert!(matches!(
            fit_amplitude_model(&noise, &nonpositive, 13),
            Err(Error::InsufficientData { .. })
        ));
    }

    fn fit_with_k(k: f64) -> StabilizationFit {
        StabilizationFit {
            u: 13,
            k,
            log_a: 0.0,
            k_stderr: 0.0,
            f_statistic: 0.0,
            p_value: 1.0,
            n_points: 0,
            n_excluded: 0,
        }
    }

    #[test]
    fn stabilize_examples() {
        let env = cycle_envelope(200);
        let f = heteroscedastic(&SynthSpec::new(200, 1, SynthKind::White), &env, 0.7).unwrap();
        let same = stabilize(&f, &env, &fit_with_k(0.0)).unwrap();
        assert_eq!(same.values(), f.values());
        assert_eq!(same.kind, SeriesKind::Stabilized);

        let powered = env.map_valid(SeriesKind::Fluctuation, |s| s.powf(0.7)).unwrap();
        let ones = stabilize(&powered, &env, &fit_with_k(0.7)).unwrap();
        assert!(ones.values().iter().all(|v| (v - 1.0).abs() < 1e-12));

        let mut levels = vec![1.0; 10];
        levels[3] = 0.0;
        levels[4] = -2.0;
        let x = stabilize(
            &series(SeriesKind::Fluctuation, vec![2.0; 10]),
            &series(SeriesKind::Smoothed, levels),
            &fit_with_k(0.5),
        )
        .unwrap();
        assert_eq!(x.flags()[3], Flag::Undefined);
        assert_eq!(x.flags()[4], Flag::Undefined);
        assert_eq!(x.valid_count(), 8);
    }

    #[test]
    fn stabilization_flattens_variance() {
        let env = slow_envelope(1700);
        let f = heteroscedastic(&SynthSpec::new(1700, 17, SynthKind::White), &env, 0.7).unwrap();
        let before = windowed_std_ratio(&f, 170).unwrap();
        let fit = fit_amplitude_model(&f, &env, 13).unwrap();
        let x = stabilize(&f, &env, &fit).unwrap();
        let after = windowed_std_ratio(&x, 170).unwrap();
        assert!(before >= 3.0, "{before}");
        assert!(after <= 1.5, "{after}");
    }

    #[test]
    fn fitted_k_never_flatter_at_zero() {
        let env = cycle_envelope(1700);
        for seed in 0..20 {
            let f = heteroscedastic(&SynthSpec::new(1700, seed, SynthKind::White), &env, 0.7).unwrap();
            let fit = fit_amplitude_model(&f, &env, 13).unwrap();
            let fitted = windowed_std_ratio(&stabilize(&f, &env, &fit).unwrap(), 39).unwrap();
            let raw = windowed_std_ratio(&stabilize(&f, &env, &fit_with_k(0.0)).unwrap(), 39).unwrap();
            assert!(fitted <= raw, "seed {seed}: {fitted} > {raw}");
        }
    }

    #[test]
    fn select_u_singleton_and_ties() {
        let env = cycle_envelope(1700);
        let f = heteroscedastic(&SynthSpec::new(1700, 8, SynthKind::White), &env, 0.7).unwrap();
        let one = select_u(&f, &env, &[13], &SelectionOptions::default()).unwrap();
        assert_eq!(one.u, 13);
        assert_eq!(one.fit, fit_amplitude_model(&f, &env, 13).unwrap());

        let all = select_u(&f, &env, &DEFAULT_U_CANDIDATES, &SelectionOptions::default()).unwrap();
        let flat: Vec<f64> = all.candidates.iter().filter_map(|c| c.flatness).collect();
        let (lo, hi) = flat
            .iter()
            .fold((f64::INFINITY, 0.0f64), |(a, b), v| (a.min(*v), b.max(*v)));
        assert!(hi / lo <= 1.10, "flatness spread {lo}..{hi}");
        assert_eq!(all.u, 13);
        assert!(select_u(&f, &env, &[], &SelectionOptions::default()).is_err());
    }

    #[test]
    fn stationarity_of_white_noise() {
        let mut total = 0.0;
        for seed in 0..100 {
            let v = generate_values(&SynthSpec::new(1700, seed, SynthKind::White)).unwrap();
            let r = stationarity_report(&series(SeriesKind::Stabilized, v), 13, 13).unwrap();
            assert_eq!(r.window_centers[0], 7);
            assert_eq!(r.windowed_means.len(), 130);
            total += r.frac_means_in_1sigma;
        }
        let mean = total / 100.0;
        assert!((mean - 0.68).abs() < 0.08, "{mean}");
    }

    #[test]
    fn stationarity_of_constant_input() {
        let r = stationarity_report(&series(SeriesKind::Stabilized, vec![2.0; 100]), 13, 13).unwrap();
        assert_eq!(r.frac_means_in_1sigma, 1.0);
        assert_eq!(r.frac_stds_in_2sigma, 1.0);
        assert!(stationarity_report(&series(SeriesKind::Stabilized, vec![2.0; 30]), 13, 13).is_err());
    }

    proptest! {
        #[test]
        fn zero_exponent_is_identity(v in prop::collection::vec(-1e3f64..1e3, 20..120), seed in 0u64..1000) {
            let n = v.len();
            let env = generate_values(&SynthSpec::new(n, seed, SynthKind::White)).unwrap();
            let env = series(SeriesKind::Smoothed, env.iter().map(|e| 1.0 + e.abs()).collect());
            let x = stabilize(&series(SeriesKind::Fluctuation, v.clone()), &env, &fit_with_k(0.0)).unwrap();
            prop_assert_eq!(x.values(), &v[..]);
        }

        #[test]
        fn k_is_scale_invariant(seed in 0u64..500, c in 0.01f64..100.0) {
            let env = cycle_envelope(400);
            let f = heteroscedastic(&SynthSpec::new(400, seed, SynthKind::White), &env, 0.5).unwrap();
            let a = fit_amplitude_model(&f, &env, 13).unwrap();
            let b = fit_amplitude_model(&f.map_valid(SeriesKind::Fluctuation, |v| c * v).unwrap(), &env, 13).unwrap();
            prop_assert!((a.k - b.k).abs() < 1e-10);
            prop_assert!((b.log_a - a.log_a - c.ln()).abs() < 1e-10);
            prop_assert!((0.0..=1.0).contains(&b.p_value) && b.k_stderr >= 0.0);
        }
    }
}
