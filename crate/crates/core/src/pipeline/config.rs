use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::acfspec::DEFAULT_MAX_LAG;
use crate::error::{Error, Result};
use crate::ingest::{DailyFormat, FixedWidthLayout, Hemisphere, WolfFormat, YearMonth};
use crate::stabilize::DEFAULT_U_CANDIDATES;
use crate::waveletspec::MorletConfig;

/// Everything `run` needs. Defaults reproduce the cycle 12–23 analysis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisConfig {
    pub daily: PathBuf,
    pub wolf: PathBuf,
    /// Fixed-width layout descriptor; CSV when absent.
    pub daily_layout: Option<PathBuf>,
    pub wolf_format: WolfFormat,
    /// Area values treated as missing besides blanks and negatives.
    pub missing_sentinels: Vec<f64>,
    pub hemispheres: Vec<Hemisphere>,
    pub u_candidates: Vec<usize>,
    /// Forces `u`, bypassing selection.
    pub u: Option<usize>,
    pub smoothing_window: usize,
    pub flatness_window: usize,
    pub max_lag: usize,
    pub morlet: MorletConfig,
    /// The cycle minimum nearest this month opens the analysis span.
    pub span_start: YearMonth,
    pub n_cycles: usize,
    pub first_cycle: u32,
    #[serde(skip)]
    pub out: PathBuf,
    pub plots: bool,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            daily: PathBuf::from("daily_areas.csv"),
            wolf: PathBuf::from("monthly_wolf.csv"),
            daily_layout: None,
            wolf_format: WolfFormat::default(),
            missing_sentinels: Vec::new(),
            hemispheres: Hemisphere::BOTH.to_vec(),
            u_candidates: DEFAULT_U_CANDIDATES.to_vec(),
            u: None,
            smoothing_window: 13,
            flatness_window: 39,
            max_lag: DEFAULT_MAX_LAG,
            morlet: MorletConfig::default(),
            span_start: YearMonth { year: 1878, month: 12 },
            n_cycles: 12,
            first_cycle: 12,
            out: PathBuf::from("out"),
            plots: true,
        }
    }
}

fn bad(line: usize, key: &str, value: &str, why: impl std::fmt::Display) -> Error {
    Error::Config(format!("line {line}: {key} = {value:?}: {why}"))
}

fn parse_list<T: FromStr>(value: &str) -> std::result::Result<Vec<T>, T::Err> {
    value
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(str::parse)
        .collect()
}

fn parse_bool(value: &str) -> Option<bool> {
    match value.to_ascii_lowercase().as_str() {
        "true" | "yes" | "on" | "1" => Some(true),
        "false" | "no" | "off" | "0" => Some(false),
        _ => None,
    }
}

impl AnalysisConfig {
    /// Applies `key = value` lines (`#` starts a comment). Relative paths are
    /// resolved against `base`.
    pub fn apply_text(&mut self, text: &str, base: &Path) -> Result<()> {
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {line}: expected key = value, got {content:?}")))?;
            self.set(key.trim(), value.trim(), base)
                .map_err(|why| bad(line, key.trim(), value.trim(), why))?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        self.apply_text(&text, base)
    }

    fn set(&mut self, key: &str, value: &str, base: &Path) -> std::result::Result<(), String> {
        let path = || base.join(value);
        let num = |v: &str| v.parse::<usize>().map_err(|e| e.to_string());
        let real = |v: &str| v.parse::<f64>().map_err(|e| e.to_string());
        match key {
            "daily" => self.daily = path(),
            "wolf" => self.wolf = path(),
            "daily_layout" => self.daily_layout = Some(path()),
            "wolf_format" | "wolf_columns" => {
                self.wolf_format = if value.eq_ignore_ascii_case("silso") {
                    WolfFormat::SILSO
                } else {
                    let cols = parse_list::<usize>(value).map_err(|e| e.to_string())?;
                    let [year_col, month_col, value_col] = cols[..] else {
                        return Err("expected silso or three column indices".into());
                    };
                    WolfFormat {
                        year_col,
                        month_col,
                        value_col,
                    }
                }
            }
            "missing_sentinels" => self.missing_sentinels = parse_list::<f64>(value).map_err(|e| e.to_string())?,
            "hemispheres" => self.hemispheres = parse_list::<Hemisphere>(value).map_err(|e| e.to_string())?,
            "u_candidates" => self.u_candidates = parse_list::<usize>(value).map_err(|e| e.to_string())?,
            "u" => self.u = Some(num(value)?),
            "smoothing_window" => self.smoothing_window = num(value)?,
            "flatness_window" => self.flatness_window = num(value)?,
            "max_lag" => self.max_lag = num(value)?,
            "scale_min" | "s0" => self.morlet.s0 = real(value)?,
            "scale_step" | "dj" => self.morlet.dj = real(value)?,
            "n_scales" => self.morlet.n_scales = num(value)?,
            "omega0" => self.morlet.omega0 = real(value)?,
            "level" => self.morlet.level = real(value)?,
            "span_start" => self.span_start = value.parse().map_err(|e: Error| e.to_string())?,
            "n_cycles" => self.n_cycles = num(value)?,
            "first_cycle" => self.first_cycle = value.parse().map_err(|e: std::num::ParseIntError| e.to_string())?,
            "out" => self.out = path(),
            "plots" => self.plots = parse_bool(value).ok_or("expected true or false")?,
            _ => return Err("unknown key".into()),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if self.hemispheres.is_empty() {
            return fail("no hemisphere selected".into());
        }
        if self.u_candidates.is_empty() && self.u.is_none() {
            return fail("no u candidates".into());
        }
        for &u in self.u_candidates.iter().chain(self.u.iter()) {
            if u < 3 || u % 2 == 0 {
                return fail(format!("u = {u} must be odd and >= 3"));
            }
        }
        if self.smoothing_window < 3 || self.smoothing_window % 2 == 0 {
            return fail(format!("smoothing window {} must be odd and >= 3", self.smoothing_window));
        }
        if self.flatness_window < 2 {
            return fail("flatness window must be at least 2".into());
        }
        if self.max_lag < 13 {
            return fail(format!("max_lag {} must cover the 7-13 band", self.max_lag));
        }
        if !(self.morlet.level > 0.5 && self.morlet.level < 1.0) {
            return fail(format!("level {} must lie in (0.5, 1)", self.morlet.level));
        }
        if !(self.morlet.s0 > 0.0 && self.morlet.dj > 0.0 && self.morlet.n_scales > 0 && self.morlet.omega0 > 0.0) {
            return fail("invalid scale grid".into());
        }
        if self.n_cycles == 0 {
            return fail("n_cycles must be positive".into());
        }
        Ok(())
    }

    pub fn daily_format(&self) -> Result<DailyFormat> {
        match &self.daily_layout {
            None => Ok(DailyFormat::Csv),
            Some(path) => {
                let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
                Ok(DailyFormat::FixedWidth(FixedWidthLayout::from_descriptor(&text)?))
            }
        }
    }
}
