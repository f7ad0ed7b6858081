//! Feature tables and their delimited-text form.
//!
//! Columns: `file_id`, `class_label` (may be empty), the eleven features in
//! canonical order, then one `valid_<feature>` column per feature holding
//! `1` or `0`. Numbers use the shortest representation that parses back to
//! the identical `f64`.

use std::collections::{BTreeMap, HashSet};
use std::io::{Read, Write};
use std::path::Path;

use thiserror::Error;

use crate::features::{Feature, FeatureVector, Validity};

#[derive(Debug, Error)]
pub enum TableError {
    #[error("duplicate file id {0:?}")]
    DuplicateFileId(String),
    #[error("bad header: {0}")]
    BadHeader(String),
    #[error("line {line}: {message}")]
    BadRow { line: u64, message: String },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRow {
    pub file_id: String,
    pub class_label: Option<String>,
    pub vector: FeatureVector,
}

/// Rows with unique file ids, kept in insertion order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FeatureTable {
    rows: Vec<FeatureRow>,
}

impl FeatureTable {
    pub fn new(rows: Vec<FeatureRow>) -> Result<Self, TableError> {
        let mut seen = HashSet::new();
        for r in &rows {
            if !seen.insert(r.file_id.as_str()) {
                return Err(TableError::DuplicateFileId(r.file_id.clone()));
            }
        }
        Ok(Self { rows })
    }

    pub fn rows(&self) -> &[FeatureRow] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn is_fully_labeled(&self) -> bool {
        self.rows.iter().all(|r| r.class_label.is_some())
    }

    /// Class labels in order of first appearance.
    pub fn classes(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for r in &self.rows {
            if let Some(c) = &r.class_label {
                if !out.contains(c) {
                    out.push(c.clone());
                }
            }
        }
        out
    }

    pub fn header() -> Vec<String> {
        let mut h = vec!["file_id".to_string(), "class_label".to_string()];
        h.extend(Feature::ALL.iter().map(|f| f.name().to_string()));
        h.extend(Feature::ALL.iter().map(|f| format!("valid_{}", f.name())));
        h
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<(), TableError> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(Self::header())?;
        for r in &self.rows {
            let mut rec = vec![
                r.file_id.clone(),
                r.class_label.clone().unwrap_or_default(),
            ];
            rec.extend(r.vector.values().iter().map(|v| format_number(*v)));
            rec.extend(Feature::ALL.iter().map(|&f| {
                if r.vector.is_valid(f) { "1" } else { "0" }.to_string()
            }));
            out.write_record(&rec)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self, TableError> {
        let mut rdr = csv::Reader::from_reader(r);
        let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
        if header != Self::header() {
            return Err(TableError::BadHeader(format!(
                "expected {} columns starting file_id,class_label,{}",
                Self::header().len(),
                Feature::ALL[0].name()
            )));
        }
        let mut rows = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            let line = rec.position().map_or(0, |p| p.line());
            let bad = |message: String| TableError::BadRow { line, message };
            let mut values = [0.0; Feature::COUNT];
            for (i, f) in Feature::ALL.iter().enumerate() {
                let cell = &rec[2 + i];
                let v: f64 = cell
                    .trim()
                    .parse()
                    .map_err(|_| bad(format!("{}: not a number: {cell:?}", f.name())))?;
                if !v.is_finite() {
                    return Err(bad(format!("{}: not finite", f.name())));
                }
                values[i] = v;
            }
            let mut validity = Validity::ALL_VALID;
            for (i, f) in Feature::ALL.iter().enumerate() {
                match rec[2 + Feature::COUNT + i].trim() {
                    "1" => {}
                    "0" => validity.set(*f, false),
                    other => return Err(bad(format!("valid_{}: expected 0 or 1, got {other:?}", f.name()))),
                }
            }
            let label = rec[1].trim();
            rows.push(FeatureRow {
                file_id: rec[0].to_string(),
                class_label: (!label.is_empty()).then(|| label.to_string()),
                vector: FeatureVector::from_values(values, validity),
            });
        }
        Self::new(rows)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), TableError> {
        self.write_csv(std::fs::File::create(path)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, TableError> {
        Self::read_csv(std::fs::File::open(path)?)
    }
}

/// Shortest round-trip decimal form of `v`.
pub fn format_number(v: f64) -> String {
    format!("{v}")
}

/// Reads a `file_id,class_label` file into a map.
pub fn read_labels(path: impl AsRef<Path>) -> Result<BTreeMap<String, String>, TableError> {
    let mut rdr = csv::Reader::from_path(path)?;
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if header != ["file_id", "class_label"] {
        return Err(TableError::BadHeader("expected file_id,class_label".into()));
    }
    let mut out = BTreeMap::new();
    for rec in rdr.records() {
        let rec = rec?;
        out.insert(rec[0].to_string(), rec[1].to_string());
    }
    Ok(out)
}
