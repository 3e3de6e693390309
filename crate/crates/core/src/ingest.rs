//! Run records and their flat CSV interchange format.

use crate::analysis::{CheckpointCurve, StrategyOutcome};
use crate::metrics::{average_cer, MetricsError, TestSetScore};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

/// Where a record came from: a bundled reference table or user ingestion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum Source {
    Fixture(u8),
    Ingested,
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Source::Fixture(table) => write!(f, "fixture:table{table}"),
            Source::Ingested => f.write_str("ingested"),
        }
    }
}

impl FromStr for Source {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "ingested" {
            return Ok(Source::Ingested);
        }
        if let Some(n) = s.strip_prefix("fixture:table") {
            if let Ok(table) = n.parse::<u8>() {
                return Ok(Source::Fixture(table));
            }
        }
        Err(format!("unknown source {s:?} (expected \"ingested\" or \"fixture:tableN\")"))
    }
}

impl From<Source> for String {
    fn from(s: Source) -> String {
        s.to_string()
    }
}

impl TryFrom<String> for Source {
    type Error = String;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

/// One completed training configuration and its measurements.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub run_id: String,
    pub strategy_id: String,
    pub encoder_tag: String,
    pub data_hours: f64,
    pub scores: Vec<TestSetScore>,
    /// Total training compute in 1e15 FLOPs.
    pub total_flops: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub curve: Option<CheckpointCurve>,
    pub source: Source,
}

impl RunRecord {
    /// Unweighted mean over this run's test sets, unrounded.
    pub fn avg_cer(&self) -> Result<f64, MetricsError> {
        average_cer(&self.scores)
    }

    /// Collapses the record to its (compute, error) outcome.
    pub fn outcome(&self) -> Result<StrategyOutcome, MetricsError> {
        Ok(StrategyOutcome::new(
            self.strategy_id.clone(),
            self.data_hours,
            self.avg_cer()?,
            self.total_flops,
        ))
    }

    pub fn validate(&self) -> Result<(), IngestError> {
        if self.run_id.is_empty() {
            return Err(IngestError::InvalidRecord { run_id: self.run_id.clone(), reason: "run_id must be non-empty".into() });
        }
        if self.scores.is_empty() {
            return Err(IngestError::InvalidRecord { run_id: self.run_id.clone(), reason: "scores must be non-empty".into() });
        }
        if !(self.total_flops > 0.0) || !self.total_flops.is_finite() {
            return Err(IngestError::InvalidRecord { run_id: self.run_id.clone(), reason: "total_flops must be positive".into() });
        }
        let mut seen = std::collections::HashSet::new();
        for s in &self.scores {
            if !seen.insert(s.test_set.as_str()) {
                return Err(IngestError::InvalidRecord {
                    run_id: self.run_id.clone(),
                    reason: format!("duplicate test set {}", s.test_set),
                });
            }
        }
        Ok(())
    }
}

const BASE_HEADER: [&str; 7] =
    ["run_id", "strategy_id", "encoder_tag", "data_hours", "test_set", "cer", "total_flops"];

/// Parses the flat run schema. One CSV row holds one test-set score; rows
/// sharing a run_id merge into a single record and must agree on every
/// other column. The trailing `source` column is optional and defaults to
/// `ingested`.
pub fn parse_runs_csv(text: &str) -> Result<Vec<RunRecord>, IngestError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(text.as_bytes());

    let mut rows = reader.records();
    let header = match rows.next() {
        Some(Ok(h)) => h,
        Some(Err(e)) => return Err(IngestError::Malformed { line: 1, message: e.to_string() }),
        None => return Err(IngestError::MissingHeader),
    };
    let fields: Vec<&str> = header.iter().map(str::trim).collect();
    let base_matches =
        |f: &[&str]| f.len() == BASE_HEADER.len() && f.iter().zip(BASE_HEADER).all(|(a, b)| *a == b);
    let with_source = if base_matches(&fields) {
        false
    } else if fields.len() == BASE_HEADER.len() + 1
        && base_matches(&fields[..BASE_HEADER.len()])
        && fields[BASE_HEADER.len()] == "source"
    {
        true
    } else {
        return Err(IngestError::BadHeader { found: fields.join(",") });
    };
    let expected_len = BASE_HEADER.len() + usize::from(with_source);

    let mut records: Vec<RunRecord> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();

    for row in rows {
        let row = match row {
            Ok(r) => r,
            Err(e) => {
                let line = e
                    .position()
                    .map(|p| p.line())
                    .unwrap_or(0);
                return Err(IngestError::Malformed { line, message: e.to_string() });
            }
        };
        let line = row.position().map(|p| p.line()).unwrap_or(0);
        if row.len() == 1 && row[0].trim().is_empty() {
            continue; // blank line
        }
        if row.len() != expected_len {
            return Err(IngestError::ColumnCount { line, expected: expected_len, found: row.len() });
        }

        let number = |i: usize, field: &'static str| -> Result<f64, IngestError> {
            row[i].trim().parse::<f64>().map_err(|_| IngestError::InvalidNumber {
                line,
                field,
                value: row[i].to_string(),
            })
        };

        let run_id = row[0].trim().to_string();
        let strategy_id = row[1].trim().to_string();
        let encoder_tag = row[2].trim().to_string();
        let data_hours = number(3, "data_hours")?;
        let test_set = row[4].trim().to_string();
        let cer = number(5, "cer")?;
        let total_flops = number(6, "total_flops")?;
        let source = if with_source {
            row[7].trim().parse::<Source>().map_err(|reason| IngestError::InvalidValue { line, reason })?
        } else {
            Source::Ingested
        };

        if run_id.is_empty() {
            return Err(IngestError::InvalidValue { line, reason: "run_id must be non-empty".into() });
        }
        if !(data_hours >= 0.0) || !data_hours.is_finite() {
            return Err(IngestError::InvalidValue { line, reason: "data_hours must be non-negative".into() });
        }
        if !(cer >= 0.0) || !cer.is_finite() {
            return Err(IngestError::InvalidValue { line, reason: "cer must be non-negative".into() });
        }
        if !(total_flops > 0.0) || !total_flops.is_finite() {
            return Err(IngestError::InvalidValue { line, reason: "total_flops must be positive".into() });
        }

        match index.get(&run_id) {
            Some(&i) => {
                let existing = &mut records[i];
                let conflict = |field: &'static str| IngestError::Inconsistent {
                    line,
                    run_id: run_id.clone(),
                    field,
                };
                if existing.strategy_id != strategy_id {
                    return Err(conflict("strategy_id"));
                }
                if existing.encoder_tag != encoder_tag {
                    return Err(conflict("encoder_tag"));
                }
                if existing.data_hours != data_hours {
                    return Err(conflict("data_hours"));
                }
                if existing.total_flops != total_flops {
                    return Err(conflict("total_flops"));
                }
                if existing.source != source {
                    return Err(conflict("source"));
                }
                if existing.scores.iter().any(|s| s.test_set == test_set) {
                    return Err(IngestError::DuplicateScore { line, run_id, test_set });
                }
                existing.scores.push(TestSetScore::new(test_set, cer));
            }
            None => {
                index.insert(run_id.clone(), records.len());
                records.push(RunRecord {
                    run_id,
                    strategy_id,
                    encoder_tag,
                    data_hours,
                    scores: vec![TestSetScore::new(test_set, cer)],
                    total_flops,
                    curve: None,
                    source,
                });
            }
        }
    }
    Ok(records)
}

/// Serializes records to the flat schema, including the `source` column so
/// re-parsing reproduces the input. Checkpoint curves have no flat
/// representation and are omitted.
pub fn serialize_runs_csv(records: &[RunRecord]) -> String {
    let mut out = String::new();
    out.push_str(&BASE_HEADER.join(","));
    out.push_str(",source\n");
    for r in records {
        for s in &r.scores {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                r.run_id, r.strategy_id, r.encoder_tag, r.data_hours, s.test_set, s.cer,
                r.total_flops, r.source
            ));
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IngestError {
    #[error("missing header row")]
    MissingHeader,
    #[error("line 1: expected header {expected}, found {found}", expected = BASE_HEADER.join(","))]
    BadHeader { found: String },
    #[error("line {line}: expected {expected} columns, found {found}")]
    ColumnCount { line: u64, expected: usize, found: usize },
    #[error("line {line}: {field} is not a number: {value:?}")]
    InvalidNumber { line: u64, field: &'static str, value: String },
    #[error("line {line}: {reason}")]
    InvalidValue { line: u64, reason: String },
    #[error("line {line}: duplicate score for run {run_id}, test set {test_set}")]
    DuplicateScore { line: u64, run_id: String, test_set: String },
    #[error("line {line}: {field} conflicts with an earlier row for run {run_id}")]
    Inconsistent { line: u64, run_id: String, field: &'static str },
    #[error("line {line}: malformed CSV: {message}")]
    Malformed { line: u64, message: String },
    #[error("invalid record {run_id}: {reason}")]
    InvalidRecord { run_id: String, reason: String },
}
