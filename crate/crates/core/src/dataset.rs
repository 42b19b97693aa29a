//! Longitudinal diary cohorts: typed records, CSV ingestion and feature-set views.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const SUBJECT_COLUMN: &str = "subject_id";
pub const DATE_COLUMN: &str = "date";
pub const LABEL_COLUMN: &str = "phq2";
pub const ESM_PREFIX: &str = "esm_";
pub const DIARY_PREFIX: &str = "diary_";

pub const DEFAULT_ESM_WIDTH: usize = 13;
pub const DEFAULT_DIARY_WIDTH: usize = 11;

/// Upper end of the extended 0-12 PHQ-2 scale.
pub const PHQ2_MAX: u8 = 12;

/// A PHQ-2 rating on the extended 0-12 scale.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct Phq2Score(u8);

impl Phq2Score {
    pub fn new(value: u8) -> Option<Self> {
        (value <= PHQ2_MAX).then_some(Self(value))
    }

    pub fn value(self) -> u8 {
        self.0
    }

    pub fn as_f64(self) -> f64 {
        f64::from(self.0)
    }
}

impl TryFrom<u8> for Phq2Score {
    type Error = String;

    fn try_from(value: u8) -> std::result::Result<Self, Self::Error> {
        Phq2Score::new(value).ok_or_else(|| format!("PHQ-2 score {value} outside 0-12"))
    }
}

impl From<Phq2Score> for u8 {
    fn from(s: Phq2Score) -> u8 {
        s.0
    }
}

/// Converts a 0-12 score to the conventional 0-6 PHQ-2 scale.
pub fn to_standard_phq2(score: Phq2Score) -> f64 {
    score.as_f64() / 2.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureSetId {
    IntradayEsm,
    DailyDiary,
    Combined,
}

impl FeatureSetId {
    pub const ALL: [FeatureSetId; 3] = [
        FeatureSetId::IntradayEsm,
        FeatureSetId::DailyDiary,
        FeatureSetId::Combined,
    ];

    pub fn uses_esm(self) -> bool {
        matches!(self, FeatureSetId::IntradayEsm | FeatureSetId::Combined)
    }

    pub fn uses_diary(self) -> bool {
        matches!(self, FeatureSetId::DailyDiary | FeatureSetId::Combined)
    }

    /// Column count of this view under `schema`.
    pub fn width(self, schema: &Schema) -> usize {
        let esm = if self.uses_esm() { schema.esm.len() } else { 0 };
        let diary = if self.uses_diary() { schema.diary.len() } else { 0 };
        esm + diary
    }

    pub fn name(self) -> &'static str {
        match self {
            FeatureSetId::IntradayEsm => "esm",
            FeatureSetId::DailyDiary => "diary",
            FeatureSetId::Combined => "combined",
        }
    }
}

impl fmt::Display for FeatureSetId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FeatureSetId {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "esm" | "intraday-esm" | "intraday_esm" => Ok(FeatureSetId::IntradayEsm),
            "diary" | "daily-diary" | "daily_diary" => Ok(FeatureSetId::DailyDiary),
            "combined" | "all" => Ok(FeatureSetId::Combined),
            other => Err(format!("unknown feature set {other:?} (expected esm, diary or combined)")),
        }
    }
}

/// Ordered feature-column names, ESM block first.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schema {
    pub esm: Vec<String>,
    pub diary: Vec<String>,
}

impl Default for Schema {
    fn default() -> Self {
        Self::with_widths(DEFAULT_ESM_WIDTH, DEFAULT_DIARY_WIDTH)
    }
}

impl Schema {
    pub fn with_widths(esm: usize, diary: usize) -> Self {
        Self {
            esm: (1..=esm).map(|i| format!("{ESM_PREFIX}{i:02}")).collect(),
            diary: (1..=diary).map(|i| format!("{DIARY_PREFIX}{i:02}")).collect(),
        }
    }

    /// Infers the feature columns from a CSV header.
    pub fn from_header(header: &[&str]) -> Result<Self> {
        let malformed = |reason: String| Error::MalformedCsv { line: 1, reason };
        if header.len() < 3
            || header[0] != SUBJECT_COLUMN
            || header[1] != DATE_COLUMN
            || header[header.len() - 1] != LABEL_COLUMN
        {
            return Err(malformed(format!(
                "header must be `{SUBJECT_COLUMN},{DATE_COLUMN},<features>,{LABEL_COLUMN}`"
            )));
        }
        let features = &header[2..header.len() - 1];
        let esm: Vec<String> = features
            .iter()
            .take_while(|c| c.starts_with(ESM_PREFIX))
            .map(|c| c.to_string())
            .collect();
        let diary: Vec<String> = features[esm.len()..].iter().map(|c| c.to_string()).collect();
        if let Some(bad) = diary.iter().find(|c| !c.starts_with(DIARY_PREFIX)) {
            return Err(malformed(format!(
                "feature column {bad:?} is neither an {ESM_PREFIX}* column before the diary block nor a {DIARY_PREFIX}* column"
            )));
        }
        Ok(Self { esm, diary })
    }

    pub fn header(&self) -> Vec<&str> {
        let mut h = vec![SUBJECT_COLUMN, DATE_COLUMN];
        h.extend(self.esm.iter().map(String::as_str));
        h.extend(self.diary.iter().map(String::as_str));
        h.push(LABEL_COLUMN);
        h
    }

    pub fn n_features(&self) -> usize {
        self.esm.len() + self.diary.len()
    }
}

/// One subject-day. Feature cells are individually optional; a block with
/// zero columns (after a view projection) is trivially complete.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DailyRecord {
    pub date: NaiveDate,
    pub esm: Vec<Option<f64>>,
    pub diary: Vec<Option<f64>>,
    pub phq2: Option<Phq2Score>,
}

impl DailyRecord {
    pub fn esm_available(&self) -> bool {
        self.esm.iter().all(Option::is_some)
    }

    pub fn diary_available(&self) -> bool {
        self.diary.iter().all(Option::is_some)
    }

    /// True iff every column this record carries is observed.
    pub fn is_available(&self) -> bool {
        self.esm_available() && self.diary_available()
    }

    pub fn is_available_in(&self, fs: FeatureSetId) -> bool {
        (!fs.uses_esm() || self.esm_available()) && (!fs.uses_diary() || self.diary_available())
    }

    /// ESM cells followed by diary cells.
    pub fn cells(&self) -> impl Iterator<Item = Option<f64>> + '_ {
        self.esm.iter().chain(self.diary.iter()).copied()
    }

    /// The full feature vector, if available.
    pub fn features(&self) -> Option<Vec<f64>> {
        self.cells().collect()
    }

    pub(crate) fn project(&self, fs: FeatureSetId) -> DailyRecord {
        DailyRecord {
            date: self.date,
            esm: if fs.uses_esm() { self.esm.clone() } else { Vec::new() },
            diary: if fs.uses_diary() { self.diary.clone() } else { Vec::new() },
            phq2: self.phq2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubjectSeries {
    pub subject_id: String,
    pub records: Vec<DailyRecord>,
}

impl SubjectSeries {
    pub fn first_date(&self) -> Option<NaiveDate> {
        self.records.first().map(|r| r.date)
    }

    pub fn last_date(&self) -> Option<NaiveDate> {
        self.records.last().map(|r| r.date)
    }

    pub fn record_on(&self, date: NaiveDate) -> Option<&DailyRecord> {
        self.records
            .binary_search_by_key(&date, |r| r.date)
            .ok()
            .map(|i| &self.records[i])
    }

    pub fn labels(&self) -> impl Iterator<Item = (NaiveDate, Phq2Score)> + '_ {
        self.records.iter().filter_map(|r| r.phq2.map(|s| (r.date, s)))
    }
}

/// All subjects of a study, sorted by subject id, each with strictly increasing dates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cohort {
    pub schema: Schema,
    pub subjects: Vec<SubjectSeries>,
}

impl Cohort {
    /// Builds a cohort from unordered records, enforcing ordering and uniqueness.
    pub fn from_records<I>(schema: Schema, records: I) -> Result<Self>
    where
        I: IntoIterator<Item = (String, DailyRecord)>,
    {
        let mut by_subject: BTreeMap<String, BTreeMap<NaiveDate, DailyRecord>> = BTreeMap::new();
        for (subject, record) in records {
            if record.esm.len() != schema.esm.len() || record.diary.len() != schema.diary.len() {
                return Err(Error::DimensionMismatch {
                    expected: schema.n_features(),
                    got: record.esm.len() + record.diary.len(),
                });
            }
            let days = by_subject.entry(subject.clone()).or_default();
            let date = record.date;
            if days.insert(date, record).is_some() {
                return Err(Error::DuplicateDay { subject, date });
            }
        }
        let subjects = by_subject
            .into_iter()
            .map(|(subject_id, days)| SubjectSeries {
                subject_id,
                records: days.into_values().collect(),
            })
            .collect();
        Ok(Self { schema, subjects })
    }

    pub fn n_records(&self) -> usize {
        self.subjects.iter().map(|s| s.records.len()).sum()
    }

    pub fn subject(&self, id: &str) -> Option<&SubjectSeries> {
        self.subjects
            .binary_search_by(|s| s.subject_id.as_str().cmp(id))
            .ok()
            .map(|i| &self.subjects[i])
    }

    pub fn summary(&self) -> CohortSummary {
        let days = self.n_records();
        let frac = |fs: FeatureSetId| {
            if days == 0 {
                return 0.0;
            }
            let missing = self
                .subjects
                .iter()
                .flat_map(|s| &s.records)
                .filter(|r| !r.is_available_in(fs))
                .count();
            missing as f64 / days as f64
        };
        let esm = frac(FeatureSetId::IntradayEsm);
        let diary = frac(FeatureSetId::DailyDiary);
        let combined = frac(FeatureSetId::Combined);
        CohortSummary {
            n_subjects: self.subjects.len(),
            n_records: days,
            n_labels: self.subjects.iter().map(|s| s.labels().count()).sum(),
            n_esm_columns: self.schema.esm.len(),
            n_diary_columns: self.schema.diary.len(),
            missing_esm: esm,
            missing_diary: diary,
            missing_combined: combined,
            missing_mean: (esm + diary + combined) / 3.0,
        }
    }
}

/// Record counts and raw (pre-imputation) missing-day fractions per feature set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CohortSummary {
    pub n_subjects: usize,
    pub n_records: usize,
    pub n_labels: usize,
    pub n_esm_columns: usize,
    pub n_diary_columns: usize,
    pub missing_esm: f64,
    pub missing_diary: f64,
    pub missing_combined: f64,
    /// Mean of the three per-view fractions.
    pub missing_mean: f64,
}

/// Restricts a cohort to the columns of one feature set. `Combined` keeps
/// ESM columns first, then diary columns.
pub fn feature_view(cohort: &Cohort, fs: FeatureSetId) -> Cohort {
    let schema = Schema {
        esm: if fs.uses_esm() { cohort.schema.esm.clone() } else { Vec::new() },
        diary: if fs.uses_diary() { cohort.schema.diary.clone() } else { Vec::new() },
    };
    let subjects = cohort
        .subjects
        .iter()
        .map(|s| SubjectSeries {
            subject_id: s.subject_id.clone(),
            records: s.records.iter().map(|r| r.project(fs)).collect(),
        })
        .collect();
    Cohort { schema, subjects }
}

pub fn load_cohort(path: impl AsRef<Path>, schema: &Schema) -> Result<Cohort> {
    let file = std::fs::File::open(path)?;
    let cohort = read_cohort(std::io::BufReader::new(file))?;
    if &cohort.schema != schema {
        return Err(Error::MalformedCsv {
            line: 1,
            reason: format!(
                "header has {} ESM and {} diary columns, expected {} and {}",
                cohort.schema.esm.len(),
                cohort.schema.diary.len(),
                schema.esm.len(),
                schema.diary.len()
            ),
        });
    }
    Ok(cohort)
}

/// Parses a cohort CSV, taking the schema from its header.
pub fn read_cohort<R: Read>(reader: R) -> Result<Cohort> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(reader);
    let mut rows = rdr.records();
    let header = match rows.next() {
        Some(h) => h?,
        None => {
            return Err(Error::MalformedCsv {
                line: 1,
                reason: "missing header".into(),
            })
        }
    };
    let header: Vec<&str> = header.iter().collect();
    let schema = Schema::from_header(&header)?;
    let width = header.len();
    let n_esm = schema.esm.len();

    let mut records = Vec::new();
    for row in rows {
        let row = row?;
        let line = row.position().map(|p| p.line()).unwrap_or(0);
        if row.len() != width {
            return Err(Error::MalformedCsv {
                line,
                reason: format!("expected {width} fields, found {}", row.len()),
            });
        }
        let subject = row[0].to_string();
        if subject.is_empty() {
            return Err(Error::MalformedCsv {
                line,
                reason: "empty subject_id".into(),
            });
        }
        let date = NaiveDate::parse_from_str(&row[1], "%Y-%m-%d").map_err(|_| {
            Error::UnparseableDate {
                line,
                text: row[1].to_string(),
            }
        })?;
        let mut cells = Vec::with_capacity(schema.n_features());
        for (j, raw) in row.iter().enumerate().take(width - 1).skip(2) {
            cells.push(parse_cell(raw, line, header[j])?);
        }
        let diary = cells.split_off(n_esm);
        let phq2 = parse_label(&row[width - 1], line)?;
        records.push((
            subject,
            DailyRecord {
                date,
                esm: cells,
                diary,
                phq2,
            },
        ));
    }
    Cohort::from_records(schema, records)
}

fn parse_cell(raw: &str, line: u64, column: &str) -> Result<Option<f64>> {
    if raw.is_empty() {
        return Ok(None);
    }
    match raw.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(Some(v)),
        _ => Err(Error::MalformedCsv {
            line,
            reason: format!("column {column}: {raw:?} is not a finite number"),
        }),
    }
}

fn parse_label(raw: &str, line: u64) -> Result<Option<Phq2Score>> {
    if raw.is_empty() {
        return Ok(None);
    }
    let value: i64 = raw.parse().map_err(|_| Error::MalformedCsv {
        line,
        reason: format!("{LABEL_COLUMN}: {raw:?} is not an integer"),
    })?;
    u8::try_from(value)
        .ok()
        .and_then(Phq2Score::new)
        .map(Some)
        .ok_or(Error::OutOfRangeLabel { line, value })
}

/// Writes the canonical CSV form: subjects and dates sorted, shortest
/// round-trip number formatting, LF line endings.
pub fn write_cohort<W: Write>(cohort: &Cohort, writer: W) -> Result<()> {
    let mut wtr = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(writer);
    wtr.write_record(cohort.schema.header())?;
    let mut fields: Vec<String> = Vec::with_capacity(cohort.schema.n_features() + 3);
    for s in &cohort.subjects {
        for r in &s.records {
            fields.clear();
            fields.push(s.subject_id.clone());
            fields.push(r.date.format("%Y-%m-%d").to_string());
            fields.extend(r.cells().map(|c| c.map(|v| v.to_string()).unwrap_or_default()));
            fields.push(r.phq2.map(|p| p.value().to_string()).unwrap_or_default());
            wtr.write_record(&fields)?;
        }
    }
    wtr.flush()?;
    Ok(())
}

pub fn save_cohort(cohort: &Cohort, path: impl AsRef<Path>) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_cohort(cohort, std::io::BufWriter::new(file))
}
