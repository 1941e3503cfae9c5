use std::fmt::Write as _;
use std::io::BufRead;

use serde::{Deserialize, Serialize};

use super::YearMonth;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonthlyWolfRecord {
    pub month: YearMonth,
    pub wolf: f64,
}

/// Zero-based column positions. Fields are separated by commas, semicolons
/// or whitespace.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WolfFormat {
    pub year_col: usize,
    pub month_col: usize,
    pub value_col: usize,
}

impl WolfFormat {
    /// `year;month;decimal_year;value;...` as distributed by SILSO.
    pub const SILSO: WolfFormat = WolfFormat {
        year_col: 0,
        month_col: 1,
        value_col: 3,
    };
}

impl Default for WolfFormat {
    fn default() -> Self {
        Self {
            year_col: 0,
            month_col: 1,
            value_col: 2,
        }
    }
}

fn split_fields(line: &str) -> Vec<&str> {
    line.split(|c: char| c == ',' || c == ';' || c.is_whitespace())
        .filter(|f| !f.is_empty())
        .collect()
}

/// Parses monthly mean Wolf numbers into an ascending, gap-free sequence.
pub fn parse_monthly_wolf<R: BufRead>(reader: R, format: WolfFormat) -> Result<Vec<MonthlyWolfRecord>> {
    let mut rows: Vec<(MonthlyWolfRecord, usize)> = Vec::new();
    let mut seen_data = false;
    let needed = format.year_col.max(format.month_col).max(format.value_col) + 1;

    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|e| Error::Input(format!("line {lineno}: {e}")))?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields = split_fields(trimmed);
        let parse_err = |message: String| Error::Parse {
            line: lineno,
            message,
        };
        if fields.len() < needed {
            if !seen_data {
                seen_data = true;
                continue;
            }
            return Err(parse_err(format!("expected at least {needed} fields")));
        }
        let year = fields[format.year_col].parse::<i32>();
        if year.is_err() && !seen_data {
            // header line
            seen_data = true;
            continue;
        }
        seen_data = true;
        let year = year.map_err(|_| parse_err(format!("non-numeric year {:?}", fields[format.year_col])))?;
        let month: u32 = fields[format.month_col]
            .parse()
            .map_err(|_| parse_err(format!("non-numeric month {:?}", fields[format.month_col])))?;
        let month = YearMonth::new(year, month).map_err(|e| parse_err(e.to_string()))?;
        let raw = fields[format.value_col];
        let wolf: f64 = raw
            .parse()
            .map_err(|_| parse_err(format!("non-numeric value {raw:?}")))?;
        if !wolf.is_finite() || wolf < 0.0 {
            return Err(parse_err(format!("invalid Wolf number {raw:?}")));
        }
        rows.push((MonthlyWolfRecord { month, wolf }, lineno));
    }

    rows.sort_by_key(|(r, _)| r.month);
    let mut missing = Vec::new();
    for pair in rows.windows(2) {
        let (a, b) = (pair[0].0.month, pair[1].0.month);
        if a == b {
            return Err(Error::DuplicateMonth {
                month: b,
                line: pair[0].1.max(pair[1].1),
            });
        }
        let mut m = a.succ();
        while m < b {
            missing.push(m);
            m = m.succ();
        }
    }
    if !missing.is_empty() {
        return Err(Error::MonthGap { missing });
    }
    Ok(rows.into_iter().map(|(r, _)| r).collect())
}

pub fn write_wolf_csv(records: &[MonthlyWolfRecord]) -> String {
    let mut s = String::from("year,month,value\n");
    for r in records {
        let _ = writeln!(s, "{},{},{}", r.month.year, r.month.month, r.wolf);
    }
    s
}
