//! Student records and CSV ingestion.

use std::fmt;
use std::fs;
use std::io::Read;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const COLUMNS: [&str; 7] = [
    "municipality_id",
    "year",
    "grade",
    "subject",
    "score",
    "ses",
    "answered_questionnaire",
];

pub const SCORE_RANGE: (f64, f64) = (0.0, 500.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Grade {
    #[default]
    Year5,
    Year9,
}

impl fmt::Display for Grade {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Grade::Year5 => "year5",
            Grade::Year9 => "year9",
        })
    }
}

impl FromStr for Grade {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "year5" => Ok(Grade::Year5),
            "year9" => Ok(Grade::Year9),
            _ => Err(Error::Input(format!("unknown grade {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Subject {
    Reading,
    #[default]
    Mathematics,
}

impl fmt::Display for Subject {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Subject::Reading => "reading",
            Subject::Mathematics => "mathematics",
        })
    }
}

impl FromStr for Subject {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "reading" => Ok(Subject::Reading),
            "mathematics" => Ok(Subject::Mathematics),
            _ => Err(Error::Input(format!("unknown subject {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudentRecord {
    pub municipality_id: String,
    pub year: i32,
    pub grade: Grade,
    pub subject: Subject,
    pub score: f64,
    pub ses: Option<f64>,
    pub answered_questionnaire: bool,
}

/// A row that failed validation. `line` is the 1-based line in the file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Reject {
    pub line: u64,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Ingested {
    pub records: Vec<StudentRecord>,
    pub rejects: Vec<Reject>,
}

/// Reads and validates student rows. `years` is the supported year set;
/// rows outside it are rejected. Malformed rows are collected as rejects,
/// while a missing header or an unreadable source is an error.
pub fn ingest<R: Read>(reader: R, years: &[i32]) -> Result<Ingested> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| Error::Input(format!("cannot read header: {e}")))?
        .clone();
    let mut index = [0usize; 7];
    for (slot, name) in index.iter_mut().zip(COLUMNS) {
        *slot = headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Input(format!("missing column {name:?}")))?;
    }

    let mut out = Ingested::default();
    let mut row = csv::StringRecord::new();
    loop {
        match rdr.read_record(&mut row) {
            Ok(false) => break,
            Ok(true) => {
                let line = row.position().map_or(0, |p| p.line());
                match parse_row(&row, &index, years) {
                    Ok(r) => out.records.push(r),
                    Err(reason) => out.rejects.push(Reject { line, reason }),
                }
            }
            Err(e) => match e.kind() {
                csv::ErrorKind::Io(_) => return Err(e.into()),
                _ => out.rejects.push(Reject {
                    line: e.position().map_or(0, |p| p.line()),
                    reason: format!("malformed row: {e}"),
                }),
            },
        }
    }
    Ok(out)
}

pub fn ingest_path(path: &Path, years: &[i32]) -> Result<Ingested> {
    let file = fs::File::open(path)
        .map_err(|e| Error::Input(format!("cannot open {}: {e}", path.display())))?;
    ingest(std::io::BufReader::new(file), years)
}

fn parse_row(
    row: &csv::StringRecord,
    index: &[usize; 7],
    years: &[i32],
) -> std::result::Result<StudentRecord, String> {
    let field = |k: usize| row.get(index[k]).ok_or_else(|| format!("missing field {}", COLUMNS[k]));

    let municipality_id = field(0)?;
    if municipality_id.is_empty() {
        return Err("missing municipality_id".into());
    }
    let year: i32 = field(1)?.parse().map_err(|_| "invalid year".to_string())?;
    if !years.contains(&year) {
        return Err(format!("year {year} not in the supported set"));
    }
    let grade: Grade = field(2)?.parse().map_err(|_| "unknown grade".to_string())?;
    let subject: Subject = field(3)?.parse().map_err(|_| "unknown subject".to_string())?;
    let score: f64 = field(4)?.parse().map_err(|_| "invalid score".to_string())?;
    if !(SCORE_RANGE.0..=SCORE_RANGE.1).contains(&score) {
        return Err("score out of range".into());
    }
    let ses = match field(5)? {
        "" => None,
        s => match s.parse::<f64>() {
            Ok(v) if v.is_finite() => Some(v),
            _ => return Err("invalid ses".into()),
        },
    };
    let answered_questionnaire = match field(6)? {
        "1" => true,
        "0" => false,
        _ => return Err("answered_questionnaire must be 0 or 1".into()),
    };
    Ok(StudentRecord {
        municipality_id: municipality_id.to_string(),
        year,
        grade,
        subject,
        score,
        ses,
        answered_questionnaire,
    })
}
