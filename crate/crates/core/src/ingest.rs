//! Hourly detector measurements: CSV parsing, validation, complete-day
//! filtering and coverage statistics.
//!
//! The accepted file layout is
//!
//! ```text
//! detector_id,date,hour,flow_veh_h,occupancy
//! D1,2023-03-14,8,720,0.12
//! ```
//!
//! Flow is vehicles per hour for the whole link. Occupancy is a fraction in
//! `[0, 1]`, or a percentage when [`ParseOptions::occupancy_percent`] is set.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use chrono::{Datelike, NaiveDate, Weekday};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MEASUREMENT_HEADER: [&str; 5] = ["detector_id", "date", "hour", "flow_veh_h", "occupancy"];

/// Hours 5 to 22 inclusive: 5 am up to 11 pm, each hour covering `[h:00, h+1:00)`.
pub fn default_analysis_hours() -> Vec<u8> {
    (5..=22).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementRecord {
    pub detector_id: String,
    pub date: NaiveDate,
    pub hour: u8,
    /// Link flow in veh/h.
    pub flow: f64,
    /// Fraction of time occupied, in `[0, 1]`.
    pub occupancy: f64,
}

impl MeasurementRecord {
    fn key(&self) -> (&str, NaiveDate, u8) {
        (&self.detector_id, self.date, self.hour)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RejectReason {
    Malformed,
    Date,
    Hour,
    Flow,
    Occupancy,
    Duplicate,
}

impl fmt::Display for RejectReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            RejectReason::Malformed => "malformed row",
            RejectReason::Date => "invalid date",
            RejectReason::Hour => "hour outside 0-23",
            RejectReason::Flow => "negative or non-numeric flow",
            RejectReason::Occupancy => "occupancy out of range",
            RejectReason::Duplicate => "duplicate (detector, date, hour)",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RejectionStats {
    pub total_rows: usize,
    pub rejected_rows: usize,
    pub by_reason: BTreeMap<RejectReason, usize>,
}

impl RejectionStats {
    fn reject(&mut self, reason: RejectReason) {
        self.rejected_rows += 1;
        *self.by_reason.entry(reason).or_default() += 1;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParseOptions {
    /// Occupancy column holds percentages in `[0, 100]`.
    pub occupancy_percent: bool,
    pub analysis_hours: Vec<u8>,
}

impl Default for ParseOptions {
    fn default() -> Self {
        Self {
            occupancy_percent: false,
            analysis_hours: default_analysis_hours(),
        }
    }
}

/// All measurements of one period, unique per `(detector_id, date, hour)`
/// and kept sorted by that key.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementTable {
    period_label: String,
    analysis_hours: Vec<u8>,
    records: Vec<MeasurementRecord>,
    rejections: RejectionStats,
}

impl MeasurementTable {
    pub fn new(
        period_label: impl Into<String>,
        analysis_hours: Vec<u8>,
        mut records: Vec<MeasurementRecord>,
    ) -> Result<Self> {
        let period_label = period_label.into();
        if period_label.trim().is_empty() {
            return Err(Error::InvalidParameter("period label is empty".into()));
        }
        let analysis_hours = normalize_hours(analysis_hours)?;
        for r in &records {
            validate_record(r)?;
        }
        records.sort_by(|a, b| a.key().cmp(&b.key()));
        if let Some(w) = records.windows(2).find(|w| w[0].key() == w[1].key()) {
            return Err(Error::DuplicateRecord {
                detector_id: w[1].detector_id.clone(),
                date: w[1].date,
                hour: w[1].hour,
            });
        }
        Ok(Self {
            period_label,
            analysis_hours,
            records,
            rejections: RejectionStats::default(),
        })
    }

    pub fn period_label(&self) -> &str {
        &self.period_label
    }

    pub fn analysis_hours(&self) -> &[u8] {
        &self.analysis_hours
    }

    pub fn records(&self) -> &[MeasurementRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn rejections(&self) -> &RejectionStats {
        &self.rejections
    }

    pub fn detector_ids(&self) -> BTreeSet<&str> {
        self.records.iter().map(|r| r.detector_id.as_str()).collect()
    }

    /// Records grouped by `(date, hour)`; within a slot, in detector-id order.
    pub fn by_slot(&self) -> BTreeMap<(NaiveDate, u8), Vec<&MeasurementRecord>> {
        let mut slots: BTreeMap<(NaiveDate, u8), Vec<&MeasurementRecord>> = BTreeMap::new();
        for r in &self.records {
            slots.entry((r.date, r.hour)).or_default().push(r);
        }
        slots
    }
}

fn normalize_hours(mut hours: Vec<u8>) -> Result<Vec<u8>> {
    hours.sort_unstable();
    hours.dedup();
    if hours.is_empty() {
        return Err(Error::InvalidParameter("analysis hour set is empty".into()));
    }
    if let Some(h) = hours.iter().find(|&&h| h > 23) {
        return Err(Error::InvalidParameter(format!("analysis hour {h} outside 0-23")));
    }
    Ok(hours)
}

fn validate_record(r: &MeasurementRecord) -> Result<()> {
    if r.hour > 23 {
        return Err(Error::InvalidParameter(format!("hour {} outside 0-23", r.hour)));
    }
    if !(r.flow.is_finite() && r.flow >= 0.0) {
        return Err(Error::InvalidParameter(format!("flow {} is negative", r.flow)));
    }
    if !(0.0..=1.0).contains(&r.occupancy) {
        return Err(Error::InvalidParameter(format!(
            "occupancy {} outside [0, 1]",
            r.occupancy
        )));
    }
    Ok(())
}

pub fn parse_measurements(
    path: impl AsRef<Path>,
    period_label: &str,
    options: &ParseOptions,
) -> Result<MeasurementTable> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_measurements(file, period_label, options)
}

/// Parses measurement CSV from any reader. Invalid rows are skipped and
/// counted; more than half of the rows rejected aborts the parse.
pub fn read_measurements<R: Read>(
    reader: R,
    period_label: &str,
    options: &ParseOptions,
) -> Result<MeasurementTable> {
    let mut rdr = csv::ReaderBuilder::new()
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);

    let header = rdr.headers()?.clone();
    if header.iter().ne(MEASUREMENT_HEADER.iter().copied()) {
        return Err(Error::Header {
            found: header.iter().collect::<Vec<_>>().join(","),
            expected: MEASUREMENT_HEADER.join(","),
        });
    }

    let mut stats = RejectionStats::default();
    let mut first_problem: Option<String> = None;
    let mut records = Vec::new();
    let mut seen = BTreeSet::new();

    for (line, row) in rdr.records().enumerate() {
        stats.total_rows += 1;
        let parsed = match row {
            Ok(row) => parse_row(&row, options.occupancy_percent),
            Err(_) => Err(RejectReason::Malformed),
        };
        let outcome = parsed.and_then(|rec| {
            if seen.insert((rec.detector_id.clone(), rec.date, rec.hour)) {
                Ok(rec)
            } else {
                Err(RejectReason::Duplicate)
            }
        });
        match outcome {
            Ok(rec) => records.push(rec),
            Err(reason) => {
                stats.reject(reason);
                // header is line 1
                first_problem.get_or_insert_with(|| format!("line {}: {reason}", line + 2));
            }
        }
    }

    if stats.rejected_rows * 2 > stats.total_rows {
        return Err(Error::TooManyRejected {
            rejected: stats.rejected_rows,
            total: stats.total_rows,
            first: first_problem.unwrap_or_default(),
        });
    }
    if stats.rejected_rows > 0 {
        log::warn!(
            "{}: rejected {} of {} rows",
            period_label,
            stats.rejected_rows,
            stats.total_rows
        );
    }

    let mut table = MeasurementTable::new(period_label, options.analysis_hours.clone(), records)?;
    table.rejections = stats;
    Ok(table)
}

fn parse_row(row: &csv::StringRecord, percent: bool) -> std::result::Result<MeasurementRecord, RejectReason> {
    if row.len() != MEASUREMENT_HEADER.len() {
        return Err(RejectReason::Malformed);
    }
    let detector_id = row[0].to_string();
    if detector_id.is_empty() {
        return Err(RejectReason::Malformed);
    }
    let date = NaiveDate::parse_from_str(&row[1], "%Y-%m-%d").map_err(|_| RejectReason::Date)?;
    let hour: u8 = row[2].parse().map_err(|_| RejectReason::Hour)?;
    if hour > 23 {
        return Err(RejectReason::Hour);
    }
    let flow: f64 = row[3].parse().map_err(|_| RejectReason::Flow)?;
    if !(flow.is_finite() && flow >= 0.0) {
        return Err(RejectReason::Flow);
    }
    let raw: f64 = row[4].parse().map_err(|_| RejectReason::Occupancy)?;
    let (upper, scale) = if percent { (100.0, 0.01) } else { (1.0, 1.0) };
    if !(0.0..=upper).contains(&raw) {
        return Err(RejectReason::Occupancy);
    }
    Ok(MeasurementRecord {
        detector_id,
        date,
        hour,
        flow,
        occupancy: raw * scale,
    })
}

/// Writes the table in the ingestion layout. Floats use the shortest
/// representation that parses back to the same value.
pub fn write_measurements<W: Write>(table: &MeasurementTable, writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(MEASUREMENT_HEADER)?;
    for r in table.records() {
        wtr.write_record([
            r.detector_id.clone(),
            r.date.format("%Y-%m-%d").to_string(),
            r.hour.to_string(),
            r.flow.to_string(),
            r.occupancy.to_string(),
        ])?;
    }
    wtr.flush().map_err(|e| Error::io("<measurement writer>", e))?;
    Ok(())
}

pub fn is_weekday(date: NaiveDate) -> bool {
    !matches!(date.weekday(), Weekday::Sat | Weekday::Sun)
}

/// Keeps only `(detector, date)` groups on a weekday that carry a record for
/// every analysis hour. Records outside the analysis hours are dropped too,
/// so each retained group holds exactly `analysis_hours.len()` records.
pub fn filter_complete_days(table: &MeasurementTable) -> MeasurementTable {
    let hours: BTreeSet<u8> = table.analysis_hours.iter().copied().collect();
    let mut kept = Vec::with_capacity(table.records.len());

    let mut start = 0;
    while start < table.records.len() {
        let head = &table.records[start];
        let end = start
            + table.records[start..]
                .iter()
                .take_while(|r| r.detector_id == head.detector_id && r.date == head.date)
                .count();
        let group = &table.records[start..end];
        if is_weekday(head.date) {
            let in_hours: Vec<&MeasurementRecord> =
                group.iter().filter(|r| hours.contains(&r.hour)).collect();
            if in_hours.len() == hours.len() {
                kept.extend(in_hours.into_iter().cloned());
            }
        }
        start = end;
    }

    MeasurementTable {
        period_label: table.period_label.clone(),
        analysis_hours: table.analysis_hours.clone(),
        records: kept,
        rejections: table.rejections.clone(),
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub period_label: String,
    pub record_count: usize,
    /// Distinct dates per detector.
    pub detector_days: BTreeMap<String, usize>,
    /// Distinct detectors per date.
    pub day_detectors: BTreeMap<NaiveDate, usize>,
    pub rejections: RejectionStats,
    /// Supplied holiday dates that fall on a weekday and are present in the
    /// table. They are kept as ordinary weekdays.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub weekday_holidays: Vec<NaiveDate>,
}

impl CoverageReport {
    pub fn with_holidays(mut self, holidays: &[NaiveDate]) -> Self {
        let mut flagged: Vec<NaiveDate> = holidays
            .iter()
            .copied()
            .filter(|d| is_weekday(*d) && self.day_detectors.contains_key(d))
            .collect();
        flagged.sort_unstable();
        flagged.dedup();
        self.weekday_holidays = flagged;
        self
    }
}

pub fn summarize_coverage(table: &MeasurementTable) -> CoverageReport {
    let pairs: BTreeSet<(&str, NaiveDate)> = table
        .records
        .iter()
        .map(|r| (r.detector_id.as_str(), r.date))
        .collect();
    let mut detector_days: BTreeMap<String, usize> = BTreeMap::new();
    let mut day_detectors: BTreeMap<NaiveDate, usize> = BTreeMap::new();
    for (id, date) in pairs {
        *detector_days.entry(id.to_string()).or_default() += 1;
        *day_detectors.entry(date).or_default() += 1;
    }
    CoverageReport {
        period_label: table.period_label.clone(),
        record_count: table.records.len(),
        detector_days,
        day_detectors,
        rejections: table.rejections.clone(),
        weekday_holidays: Vec::new(),
    }
}
