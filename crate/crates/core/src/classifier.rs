//! Range-matching classification on the selected features, batch scoring,
//! and the results table.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::{Read, Write};

use thiserror::Error;

use crate::features::{Feature, FeatureVector};
use crate::table::format_number;
use crate::training::GenreModel;

pub const UNCLASSIFIED: &str = "UNCLASSIFIED";

/// Stand-in width for ranges whose min equals max.
const DEGENERATE_WIDTH: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum ClassifyError {
    #[error("selected feature {0} is not valid in the input vector")]
    MissingFeature(Feature),
    #[error("no results to evaluate")]
    EmptyResults,
    #[error("results table has no actual column values")]
    MissingActual,
    #[error("bad results table: {0}")]
    BadTable(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub class: String,
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassificationResult {
    pub file_id: String,
    /// A model class or [`UNCLASSIFIED`].
    pub predicted: String,
    /// Every model class, nearest first.
    pub candidates: Vec<Candidate>,
    pub used_features: Vec<Feature>,
}

impl ClassificationResult {
    pub fn is_classified(&self) -> bool {
        self.predicted != UNCLASSIFIED
    }
}

/// Assigns the class whose ranges contain the vector on every selected
/// feature; among several, the one with the smallest normalized distance to
/// the range centers.
pub fn classify(
    file_id: &str,
    vector: &FeatureVector,
    model: &GenreModel,
) -> Result<ClassificationResult, ClassifyError> {
    let used = &model.selected_features;
    if let Some(&f) = used.iter().find(|&&f| !vector.is_valid(f)) {
        return Err(ClassifyError::MissingFeature(f));
    }

    let mut scored: Vec<(Candidate, bool)> = model
        .classes
        .iter()
        .map(|class| {
            let ranges = model.class_ranges.get(class);
            let mut distance = 0.0;
            let mut contained = true;
            for &f in used {
                let v = vector.get(f);
                match ranges.and_then(|r| r.get(&f)) {
                    Some(r) => {
                        let width = if r.width() > 0.0 { r.width() } else { DEGENERATE_WIDTH };
                        distance += (v - r.center()).abs() / width;
                        contained &= r.contains(v);
                    }
                    None => {
                        distance = f64::INFINITY;
                        contained = false;
                    }
                }
            }
            (
                Candidate {
                    class: class.clone(),
                    distance,
                },
                contained,
            )
        })
        .collect();
    // stable: equal distances keep model class order
    scored.sort_by(|a, b| a.0.distance.total_cmp(&b.0.distance));

    let predicted = scored
        .iter()
        .find(|(_, inside)| *inside)
        .map_or_else(|| UNCLASSIFIED.to_string(), |(c, _)| c.class.clone());
    Ok(ClassificationResult {
        file_id: file_id.to_string(),
        predicted,
        candidates: scored.into_iter().map(|(c, _)| c).collect(),
        used_features: used.clone(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationReport {
    pub total: usize,
    pub successful: usize,
    /// Misclassified or unclassified rows, keyed by their actual class.
    pub per_class_errors: BTreeMap<String, usize>,
    pub accuracy: f64,
}

impl EvaluationReport {
    pub fn accuracy_percent(&self) -> String {
        format!("{:.2}", 100.0 * self.accuracy)
    }

    pub fn unsuccessful(&self) -> usize {
        self.total - self.successful
    }

    /// Summary table: totals with percentages, then error counts per class.
    pub fn render(&self) -> String {
        let mut out = String::new();
        let ok = format!("Successful ({}%)", self.accuracy_percent());
        let bad = format!(
            "Unsuccessful ({:.2}%)",
            100.0 * self.unsuccessful() as f64 / self.total as f64
        );
        let _ = writeln!(out, "{:<8}{:<24}{}", "Total", ok, bad);
        let _ = writeln!(out, "{:<8}{:<24}{}", self.total, self.successful, self.unsuccessful());
        if !self.per_class_errors.is_empty() {
            let _ = writeln!(out);
            let _ = writeln!(out, "Errors by class");
            for (class, n) in &self.per_class_errors {
                let _ = writeln!(out, "  {class:<20}{n}");
            }
        }
        out
    }
}

/// Scores `(predicted, actual)` pairs.
pub fn evaluate<P: AsRef<str>, A: AsRef<str>>(
    results: &[(P, A)],
) -> Result<EvaluationReport, ClassifyError> {
    if results.is_empty() {
        return Err(ClassifyError::EmptyResults);
    }
    let mut successful = 0;
    let mut per_class_errors = BTreeMap::new();
    for (p, a) in results {
        if p.as_ref() == a.as_ref() {
            successful += 1;
        } else {
            *per_class_errors.entry(a.as_ref().to_string()).or_insert(0) += 1;
        }
    }
    Ok(EvaluationReport {
        total: results.len(),
        successful,
        per_class_errors,
        accuracy: successful as f64 / results.len() as f64,
    })
}

/// One line of the results table.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub file_id: String,
    pub predicted: String,
    pub actual: Option<String>,
    pub distance_best: f64,
    pub used_features: Vec<Feature>,
}

impl ResultRow {
    pub fn from_result(r: &ClassificationResult, actual: Option<String>) -> Self {
        Self {
            file_id: r.file_id.clone(),
            predicted: r.predicted.clone(),
            actual,
            distance_best: r.candidates.first().map_or(f64::INFINITY, |c| c.distance),
            used_features: r.used_features.clone(),
        }
    }
}

const RESULT_HEADER: [&str; 5] = ["file_id", "predicted", "actual", "distance_best", "used_features"];

pub fn write_results<W: Write>(rows: &[ResultRow], w: W) -> Result<(), ClassifyError> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(RESULT_HEADER)?;
    for r in rows {
        let used: Vec<&str> = r.used_features.iter().map(|f| f.name()).collect();
        out.write_record([
            r.file_id.as_str(),
            r.predicted.as_str(),
            r.actual.as_deref().unwrap_or(""),
            &format_number(r.distance_best),
            &used.join(";"),
        ])?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_results<R: Read>(r: R) -> Result<Vec<ResultRow>, ClassifyError> {
    let mut rdr = csv::Reader::from_reader(r);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    let col = |name: &str| header.iter().position(|h| h == name);
    let (Some(id), Some(pred)) = (col("file_id"), col("predicted")) else {
        return Err(ClassifyError::BadTable("needs file_id and predicted columns".into()));
    };
    let actual = col("actual");
    let dist = col("distance_best");
    let used = col("used_features");
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let get = |i: Option<usize>| i.and_then(|i| rec.get(i)).unwrap_or("").trim().to_string();
        let distance_best = match get(dist).as_str() {
            "" => f64::NAN,
            s => s
                .parse()
                .map_err(|_| ClassifyError::BadTable(format!("bad distance {s:?}")))?,
        };
        let used_features = get(used)
            .split(';')
            .filter(|s| !s.is_empty())
            .map(|s| s.parse().map_err(ClassifyError::BadTable))
            .collect::<Result<Vec<Feature>, _>>()?;
        let a = get(actual);
        rows.push(ResultRow {
            file_id: get(Some(id)),
            predicted: get(Some(pred)),
            actual: (!a.is_empty()).then_some(a),
            distance_best,
            used_features,
        });
    }
    Ok(rows)
}

/// Scores a results table; every row must carry an actual class.
pub fn evaluate_rows(rows: &[ResultRow]) -> Result<EvaluationReport, ClassifyError> {
    if rows.is_empty() {
        return Err(ClassifyError::EmptyResults);
    }
    let pairs = rows
        .iter()
        .map(|r| {
            r.actual
                .as_deref()
                .map(|a| (r.predicted.as_str(), a))
                .ok_or(ClassifyError::MissingActual)
        })
        .collect::<Result<Vec<_>, _>>()?;
    evaluate(&pairs)
}
