use std::fmt::Write as _;
use std::io::BufRead;
use std::str::FromStr;

use chrono::{Local, NaiveDate};
use serde::{Deserialize, Serialize};

use super::Hemisphere;
use crate::error::{Error, Result};

/// One day's total sunspot area on one hemisphere, in millionths of a
/// solar hemisphere.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DailyAreaRecord {
    pub date: NaiveDate,
    pub hemisphere: Hemisphere,
    pub area: f64,
}

/// Field a fixed-width column span maps to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FixedField {
    Year,
    Month,
    Day,
    /// `YYYY-MM-DD` or `YYYYMMDD`.
    Date,
    Hemisphere,
    Area,
    North,
    South,
}

impl FromStr for FixedField {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.trim().to_ascii_lowercase().as_str() {
            "year" => FixedField::Year,
            "month" => FixedField::Month,
            "day" => FixedField::Day,
            "date" => FixedField::Date,
            "hemisphere" => FixedField::Hemisphere,
            "area" => FixedField::Area,
            "north" => FixedField::North,
            "south" => FixedField::South,
            other => return Err(Error::Config(format!("unknown fixed-width field {other:?}"))),
        })
    }
}

/// Column span, 1-based and inclusive on both ends.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnSpan {
    pub start: usize,
    pub end: usize,
    pub field: FixedField,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FixedWidthLayout {
    spans: Vec<ColumnSpan>,
}

impl FixedWidthLayout {
    pub fn new(spans: Vec<ColumnSpan>) -> Result<Self> {
        let has = |f: FixedField| spans.iter().any(|s| s.field == f);
        for s in &spans {
            if s.start == 0 || s.end < s.start {
                return Err(Error::Config(format!(
                    "bad column span {}-{} for {:?}",
                    s.start, s.end, s.field
                )));
            }
        }
        let dated = has(FixedField::Date)
            || (has(FixedField::Year) && has(FixedField::Month) && has(FixedField::Day));
        if !dated {
            return Err(Error::Config(
                "layout needs a date field or year/month/day fields".into(),
            ));
        }
        let split = has(FixedField::North) || has(FixedField::South);
        let single = has(FixedField::Area) && has(FixedField::Hemisphere);
        if split == single {
            return Err(Error::Config(
                "layout needs either north/south area columns or area+hemisphere columns".into(),
            ));
        }
        Ok(Self { spans })
    }

    /// Parses the descriptor text: one `start end field` triple per line,
    /// `#` starts a comment.
    pub fn from_descriptor(text: &str) -> Result<Self> {
        let mut spans = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let parts: Vec<&str> = line.split_whitespace().collect();
            let [start, end, field] = parts.as_slice() else {
                return Err(Error::Config(format!(
                    "descriptor line {}: expected `start end field`",
                    idx + 1
                )));
            };
            let num = |s: &str| {
                s.parse::<usize>().map_err(|_| {
                    Error::Config(format!("descriptor line {}: bad column {s:?}", idx + 1))
                })
            };
            spans.push(ColumnSpan {
                start: num(start)?,
                end: num(end)?,
                field: field.parse()?,
            });
        }
        Self::new(spans)
    }

    pub fn spans(&self) -> &[ColumnSpan] {
        &self.spans
    }

    fn slots(&self) -> usize {
        let n = self
            .spans
            .iter()
            .filter(|s| matches!(s.field, FixedField::North | FixedField::South))
            .count();
        n.max(1)
    }

    fn field(&self, field: FixedField) -> Option<&ColumnSpan> {
        self.spans.iter().find(|s| s.field == field)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum DailyFormat {
    /// `date,hemisphere,area` with an optional header line.
    Csv,
    FixedWidth(FixedWidthLayout),
}

/// Which raw values mean "no observation".
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MissingRule {
    pub blank: bool,
    pub negative: bool,
    pub sentinels: Vec<f64>,
}

impl Default for MissingRule {
    fn default() -> Self {
        Self {
            blank: true,
            negative: true,
            sentinels: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DailyParseOptions {
    pub missing: MissingRule,
    pub min_date: NaiveDate,
    pub max_date: NaiveDate,
}

impl Default for DailyParseOptions {
    fn default() -> Self {
        Self {
            missing: MissingRule::default(),
            min_date: NaiveDate::from_ymd_opt(1874, 1, 1).expect("valid date"),
            max_date: Local::now().date_naive(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Malformed {
    pub line: usize,
    pub reason: String,
}

/// Parsed records plus bookkeeping. `records + missing + malformed entries`
/// equals `entries`; a fixed-width line with north and south columns is two
/// entries.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DailyParse {
    pub records: Vec<DailyAreaRecord>,
    pub entries: usize,
    pub dropped_missing: usize,
    pub dropped_malformed: usize,
    pub malformed: Vec<Malformed>,
}

impl DailyParse {
    pub fn dropped(&self) -> usize {
        self.dropped_missing + self.dropped_malformed
    }
}

enum Area {
    Value(f64),
    Missing,
}

pub fn parse_daily_areas<R: BufRead>(
    reader: R,
    format: &DailyFormat,
    options: &DailyParseOptions,
) -> Result<DailyParse> {
    let mut out = DailyParse::default();
    let mut data_lines = 0_usize;
    let mut seen_data = false;

    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|e| Error::Input(format!("line {lineno}: {e}")))?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        if !seen_data && matches!(format, DailyFormat::Csv) && is_csv_header(trimmed) {
            seen_data = true;
            continue;
        }
        seen_data = true;
        data_lines += 1;

        let slots = match format {
            DailyFormat::Csv => 1,
            DailyFormat::FixedWidth(layout) => layout.slots(),
        };
        out.entries += slots;

        let parsed = match format {
            DailyFormat::Csv => parse_csv_line(trimmed).map(|e| vec![e]),
            DailyFormat::FixedWidth(layout) => parse_fixed_line(&line, layout),
        };
        match parsed {
            Ok(entries) => {
                for (date, hemisphere, area) in entries {
                    if date < options.min_date || date > options.max_date {
                        out.dropped_malformed += 1;
                        out.malformed.push(Malformed {
                            line: lineno,
                            reason: format!(
                                "date {date} outside {}..={}",
                                options.min_date, options.max_date
                            ),
                        });
                        continue;
                    }
                    match classify(area, &options.missing) {
                        Ok(Area::Value(area)) => out.records.push(DailyAreaRecord {
                            date,
                            hemisphere,
                            area,
                        }),
                        Ok(Area::Missing) => out.dropped_missing += 1,
                        Err(reason) => {
                            out.dropped_malformed += 1;
                            out.malformed.push(Malformed {
                                line: lineno,
                                reason,
                            });
                        }
                    }
                }
            }
            Err(reason) => {
                out.dropped_malformed += slots;
                out.malformed.push(Malformed {
                    line: lineno,
                    reason,
                });
            }
        }
    }

    let bad_lines = {
        let mut lines: Vec<usize> = out.malformed.iter().map(|m| m.line).collect();
        lines.dedup();
        lines.len()
    };
    if data_lines > 0 && bad_lines * 2 > data_lines {
        let first = &out.malformed[0];
        return Err(Error::FormatMismatch {
            malformed: bad_lines,
            total: data_lines,
            first_line: first.line,
            first_content: first.reason.clone(),
        });
    }
    if !out.malformed.is_empty() {
        log::warn!(
            "{} malformed daily-area lines (first at line {}: {})",
            bad_lines,
            out.malformed[0].line,
            out.malformed[0].reason
        );
    }
    Ok(out)
}

fn is_csv_header(line: &str) -> bool {
    line.split(',')
        .next()
        .map(|f| f.trim().eq_ignore_ascii_case("date"))
        .unwrap_or(false)
}

fn classify(raw: Option<f64>, rule: &MissingRule) -> std::result::Result<Area, String> {
    match raw {
        None if rule.blank => Ok(Area::Missing),
        None => Err("blank area".into()),
        Some(v) if rule.sentinels.contains(&v) => Ok(Area::Missing),
        Some(v) if v < 0.0 && rule.negative => Ok(Area::Missing),
        Some(v) if v < 0.0 => Err(format!("negative area {v}")),
        Some(v) => Ok(Area::Value(v)),
    }
}

type Entry = (NaiveDate, Hemisphere, Option<f64>);

fn parse_area(field: &str) -> std::result::Result<Option<f64>, String> {
    let f = field.trim();
    if f.is_empty() {
        return Ok(None);
    }
    let v: f64 = f.parse().map_err(|_| format!("non-numeric area {f:?}"))?;
    if !v.is_finite() {
        return Err(format!("non-finite area {f:?}"));
    }
    Ok(Some(v))
}

fn parse_date(field: &str) -> std::result::Result<NaiveDate, String> {
    let f = field.trim();
    NaiveDate::parse_from_str(f, "%Y-%m-%d")
        .or_else(|_| NaiveDate::parse_from_str(f, "%Y%m%d"))
        .map_err(|_| format!("bad date {f:?}"))
}

fn parse_csv_line(line: &str) -> std::result::Result<Entry, String> {
    let fields: Vec<&str> = line.split(',').collect();
    if fields.len() != 3 {
        return Err(format!("expected 3 comma-separated fields, got {}", fields.len()));
    }
    let date = parse_date(fields[0])?;
    let hemisphere: Hemisphere = fields[1].parse().map_err(|e: Error| e.to_string())?;
    let area = parse_area(fields[2])?;
    Ok((date, hemisphere, area))
}

fn column<'a>(line: &'a str, span: &ColumnSpan) -> &'a str {
    let start = (span.start - 1).min(line.len());
    let end = span.end.min(line.len());
    line.get(start..end).unwrap_or("")
}

fn parse_fixed_line(line: &str, layout: &FixedWidthLayout) -> std::result::Result<Vec<Entry>, String> {
    let int = |field: FixedField| -> std::result::Result<i64, String> {
        let span = layout.field(field).expect("validated layout");
        let raw = column(line, span).trim();
        raw.parse()
            .map_err(|_| format!("bad {field:?} {raw:?} in columns {}-{}", span.start, span.end))
    };
    let date = match layout.field(FixedField::Date) {
        Some(span) => parse_date(column(line, span))?,
        None => {
            let (y, m, d) = (int(FixedField::Year)?, int(FixedField::Month)?, int(FixedField::Day)?);
            NaiveDate::from_ymd_opt(y as i32, m as u32, d as u32)
                .ok_or_else(|| format!("invalid date {y}-{m}-{d}"))?
        }
    };
    let mut entries = Vec::with_capacity(2);
    if let Some(span) = layout.field(FixedField::Area) {
        let hemi_span = layout.field(FixedField::Hemisphere).expect("validated layout");
        let hemisphere: Hemisphere = column(line, hemi_span)
            .parse()
            .map_err(|e: Error| e.to_string())?;
        entries.push((date, hemisphere, parse_area(column(line, span))?));
    } else {
        for (field, hemisphere) in [
            (FixedField::North, Hemisphere::North),
            (FixedField::South, Hemisphere::South),
        ] {
            if let Some(span) = layout.field(field) {
                entries.push((date, hemisphere, parse_area(column(line, span))?));
            }
        }
    }
    Ok(entries)
}

/// Serializes records in the canonical CSV schema (with header).
pub fn write_daily_csv(records: &[DailyAreaRecord]) -> String {
    let mut s = String::from("date,hemisphere,area\n");
    for r in records {
        let _ = writeln!(s, "{},{},{}", r.date.format("%Y-%m-%d"), r.hemisphere, r.area);
    }
    s
}
