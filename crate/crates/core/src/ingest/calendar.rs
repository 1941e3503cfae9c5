use chrono::{Duration, NaiveDate, NaiveDateTime, NaiveTime};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const MILLIS_PER_DAY: f64 = 86_400_000.0;

/// Uniform Carrington calendar: rotation `r` covers
/// `[epoch + (r-1)·P, epoch + r·P)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CarringtonCalendar {
    epoch: NaiveDateTime,
    synodic_period: f64,
}

impl CarringtonCalendar {
    pub fn new(epoch: NaiveDateTime, synodic_period: f64) -> Result<Self> {
        if !(synodic_period > 27.0 && synodic_period < 28.0) {
            return Err(Error::Parameter(format!(
                "synodic period {synodic_period} outside (27, 28) days"
            )));
        }
        Ok(Self {
            epoch,
            synodic_period,
        })
    }

    /// Start of rotation 1 at 1853-11-09 21:36 UTC, 27.2753-day synodic period.
    pub fn standard() -> Self {
        let epoch = NaiveDate::from_ymd_opt(1853, 11, 9)
            .and_then(|d| d.and_hms_opt(21, 36, 0))
            .expect("valid epoch");
        Self {
            epoch,
            synodic_period: 27.2753,
        }
    }

    pub fn epoch(&self) -> NaiveDateTime {
        self.epoch
    }

    pub fn synodic_period(&self) -> f64 {
        self.synodic_period
    }

    /// Rotation containing the given instant.
    pub fn rotation_of_instant(&self, instant: NaiveDateTime) -> Result<i64> {
        if instant < self.epoch {
            return Err(Error::Domain(format!(
                "{instant} precedes the Carrington epoch {}",
                self.epoch
            )));
        }
        let elapsed = (instant - self.epoch).num_milliseconds();
        Ok(elapsed.div_euclid(self.period_millis()) + 1)
    }

    /// Rotation containing 00:00 UTC of `date`.
    pub fn rotation_of(&self, date: NaiveDate) -> Result<i64> {
        self.rotation_of_instant(date.and_time(NaiveTime::MIN))
    }

    pub fn rotation_start(&self, rotation: i64) -> NaiveDateTime {
        self.epoch + Duration::milliseconds((rotation - 1) * self.period_millis())
    }

    pub fn rotation_midpoint(&self, rotation: i64) -> NaiveDateTime {
        self.rotation_start(rotation) + Duration::milliseconds(self.period_millis() / 2)
    }

    /// Boundaries are computed on whole milliseconds so they are exact.
    fn period_millis(&self) -> i64 {
        (self.synodic_period * MILLIS_PER_DAY).round() as i64
    }
}

impl Default for CarringtonCalendar {
    fn default() -> Self {
        Self::standard()
    }
}
