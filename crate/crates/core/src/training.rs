//! Model training: per-class feature ranges, the gain-ratio matrix against
//! pulse-clarity tertiles, Max/Avg/Threshold rows and top-k selection.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::Feature;
use crate::infotheory::{gain_ratio, BinEdges, DiscreteDataset, InfoError};
use crate::par::{map_ordered, Parallelism};
use crate::table::FeatureTable;

pub const MODEL_VERSION: u32 = 1;

/// Label of the single pooled row produced when gain ratios are not split by class.
pub const POOLED_ROW: &str = "all";

const MISSING_BIN: &str = "missing";

/// Classes with fewer rows than this get a warning: tertiles barely fit.
const MIN_ROWS_PER_CLASS: usize = 4;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("feature table is empty")]
    EmptyTable,
    #[error("row {0:?} has no class label")]
    UnlabeledRow(String),
    #[error("class {0:?} has no rows")]
    EmptyClass(String),
    #[error("k = {k} exceeds the {available} available features")]
    KTooLarge { k: usize, available: usize },
    #[error("k must be positive")]
    ZeroK,
    #[error("matrix has {rows} rows for {classes} classes or ragged columns")]
    MatrixShape { rows: usize, classes: usize },
    #[error(transparent)]
    Info(#[from] InfoError),
    #[error("model file: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Which threshold formula turns Max/Avg into a threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FormulaVariant {
    /// `(max + avg) / 2`
    #[default]
    TableMean,
    /// `(max + avg) / 2 + (max − avg) / 4`
    TextFormula,
}

impl std::str::FromStr for FormulaVariant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "table_mean" => Ok(Self::TableMean),
            "text_formula" => Ok(Self::TextFormula),
            _ => Err(format!("unknown formula variant {s:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValueRange {
    pub min: f64,
    pub max: f64,
}

impl ValueRange {
    pub fn contains(&self, v: f64) -> bool {
        self.min <= v && v <= self.max
    }

    pub fn center(&self) -> f64 {
        0.5 * (self.min + self.max)
    }

    pub fn width(&self) -> f64 {
        self.max - self.min
    }
}

pub type ClassRanges = BTreeMap<String, BTreeMap<Feature, ValueRange>>;

/// Gain ratio per (class, feature) plus the column-wise summary rows.
#[derive(Debug, Clone, PartialEq)]
pub struct GainRatioMatrix {
    pub classes: Vec<String>,
    pub features: Vec<Feature>,
    /// `entries[c][f]` for `classes[c]`, `features[f]`.
    pub entries: Vec<Vec<f64>>,
    pub max_row: BTreeMap<Feature, f64>,
    pub avg_row: BTreeMap<Feature, f64>,
    pub threshold_row: BTreeMap<Feature, f64>,
    /// Classes whose pulse clarity was constant; their ratios are all 0.
    pub degenerate_classes: Vec<String>,
}

impl GainRatioMatrix {
    /// Builds a matrix from precomputed ratios and fills the Max and Avg rows.
    /// The threshold row starts empty; see [`compute_thresholds`].
    pub fn from_entries(
        classes: Vec<String>,
        features: Vec<Feature>,
        entries: Vec<Vec<f64>>,
    ) -> Result<Self, TrainError> {
        if classes.is_empty()
            || entries.len() != classes.len()
            || entries.iter().any(|r| r.len() != features.len())
        {
            return Err(TrainError::MatrixShape {
                rows: entries.len(),
                classes: classes.len(),
            });
        }
        let n = entries.len() as f64;
        let mut max_row = BTreeMap::new();
        let mut avg_row = BTreeMap::new();
        for (j, &f) in features.iter().enumerate() {
            let col = entries.iter().map(|r| r[j]);
            max_row.insert(f, col.clone().fold(f64::NEG_INFINITY, f64::max));
            avg_row.insert(f, col.sum::<f64>() / n);
        }
        Ok(Self {
            classes,
            features,
            entries,
            max_row,
            avg_row,
            threshold_row: BTreeMap::new(),
            degenerate_classes: Vec::new(),
        })
    }

    pub fn get(&self, class: &str, feature: Feature) -> Option<f64> {
        let c = self.classes.iter().position(|x| x == class)?;
        let f = self.features.iter().position(|&x| x == feature)?;
        Some(self.entries[c][f])
    }

    /// Fixed-width text layout: one row per class, then Max, Avg and Threshold.
    pub fn render(&self) -> String {
        let label_w = self
            .classes
            .iter()
            .map(String::len)
            .chain(["Threshold".len(), "Class".len()])
            .max()
            .unwrap_or(9);
        let col_w = |f: &Feature| f.label().len().max(8);
        let mut out = format!("{:<label_w$}", "Class");
        for f in &self.features {
            out.push_str(&format!("  {:>w$}", f.label(), w = col_w(f)));
        }
        out.push('\n');
        let mut line = |name: &str, values: Vec<f64>| {
            out.push_str(&format!("{name:<label_w$}"));
            for (f, v) in self.features.iter().zip(values) {
                out.push_str(&format!("  {:>w$.4}", v, w = col_w(f)));
            }
            out.push('\n');
        };
        for (c, row) in self.classes.iter().zip(&self.entries) {
            line(c, row.clone());
        }
        let summary = |m: &BTreeMap<Feature, f64>| {
            self.features
                .iter()
                .map(|f| m.get(f).copied().unwrap_or(f64::NAN))
                .collect()
        };
        line("Max", summary(&self.max_row));
        line("Avg", summary(&self.avg_row));
        if !self.threshold_row.is_empty() {
            line("Threshold", summary(&self.threshold_row));
        }
        out
    }
}

/// Trained classifier state.
#[derive(Debug, Clone, PartialEq)]
pub struct GenreModel {
    pub classes: Vec<String>,
    pub class_ranges: ClassRanges,
    pub selected_features: Vec<Feature>,
    pub matrix: GainRatioMatrix,
    pub bin_edges: BTreeMap<Feature, BinEdges>,
    pub formula_variant: FormulaVariant,
}

/// Every feature except the class variable takes part in gain-ratio selection.
pub fn candidate_features() -> Vec<Feature> {
    Feature::ALL
        .into_iter()
        .filter(|&f| f != Feature::PulseClarity)
        .collect()
}

fn require_labels(table: &FeatureTable) -> Result<(), TrainError> {
    if table.is_empty() {
        return Err(TrainError::EmptyTable);
    }
    match table.rows().iter().find(|r| r.class_label.is_none()) {
        Some(r) => Err(TrainError::UnlabeledRow(r.file_id.clone())),
        None => Ok(()),
    }
}

/// Min and max of each feature per class, over the rows where that feature is valid.
pub fn compute_class_ranges(table: &FeatureTable) -> Result<ClassRanges, TrainError> {
    require_labels(table)?;
    let mut out: ClassRanges = BTreeMap::new();
    for row in table.rows() {
        let class = row.class_label.as_ref().expect("labels checked");
        let ranges = out.entry(class.clone()).or_default();
        for f in Feature::ALL {
            if !row.vector.is_valid(f) {
                continue;
            }
            let v = row.vector.get(f);
            ranges
                .entry(f)
                .and_modify(|r| {
                    r.min = r.min.min(v);
                    r.max = r.max.max(v);
                })
                .or_insert(ValueRange { min: v, max: v });
        }
    }
    Ok(out)
}

/// Gain ratios of one row subset, or `None` when its pulse clarity is constant.
fn subset_gain_ratios(
    table: &FeatureTable,
    rows: &[usize],
    features: &[Feature],
) -> Result<Option<Vec<f64>>, TrainError> {
    let pulse: Vec<f64> = rows
        .iter()
        .map(|&i| table.rows()[i].vector.pulse_clarity)
        .collect();
    let pulse_edges = BinEdges::fit(&pulse)?;
    if pulse_edges.is_degenerate() {
        return Ok(None);
    }

    let columns: Vec<Vec<String>> = features
        .iter()
        .map(|&f| {
            let valid: Vec<f64> = rows
                .iter()
                .map(|&i| &table.rows()[i].vector)
                .filter(|v| v.is_valid(f))
                .map(|v| v.get(f))
                .collect();
            let edges = BinEdges::fit(&valid).ok();
            rows.iter()
                .map(|&i| {
                    let v = &table.rows()[i].vector;
                    match (&edges, v.is_valid(f)) {
                        (Some(e), true) => e.label(v.get(f)).to_string(),
                        _ => MISSING_BIN.to_string(),
                    }
                })
                .collect()
        })
        .collect();

    let mut ds = DiscreteDataset::new(features.iter().map(|f| f.name()));
    for (r, &p) in pulse.iter().enumerate() {
        ds.push(
            columns.iter().map(|c| c[r].clone()),
            pulse_edges.label(p).as_str(),
        )?;
    }
    let ratios = features
        .iter()
        .map(|f| gain_ratio(&ds, f.name()))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Some(ratios))
}

/// Gain ratio of every candidate feature against pulse-clarity tertiles.
///
/// With `per_class` each class is analysed on its own rows (tertiles re-fit
/// per class); otherwise all rows form one pooled row named [`POOLED_ROW`].
pub fn compute_gain_ratio_matrix(
    table: &FeatureTable,
    per_class: bool,
    mode: Parallelism,
) -> Result<GainRatioMatrix, TrainError> {
    if table.is_empty() {
        return Err(TrainError::EmptyTable);
    }
    let features = candidate_features();
    let groups: Vec<(String, Vec<usize>)> = if per_class {
        require_labels(table)?;
        table
            .classes()
            .into_iter()
            .map(|c| {
                let idx = (0..table.len())
                    .filter(|&i| table.rows()[i].class_label.as_deref() == Some(c.as_str()))
                    .collect();
                (c, idx)
            })
            .collect()
    } else {
        vec![(POOLED_ROW.to_string(), (0..table.len()).collect())]
    };

    let results = map_ordered(&groups, mode, |(_, rows)| {
        subset_gain_ratios(table, rows, &features)
    });

    let mut entries = Vec::with_capacity(groups.len());
    let mut degenerate = Vec::new();
    for ((class, _), r) in groups.iter().zip(results) {
        match r? {
            Some(row) => entries.push(row),
            None => {
                log::warn!("class {class:?}: pulse clarity is constant, gain ratios set to 0");
                degenerate.push(class.clone());
                entries.push(vec![0.0; features.len()]);
            }
        }
    }
    let classes = groups.into_iter().map(|(c, _)| c).collect();
    let mut m = GainRatioMatrix::from_entries(classes, features, entries)?;
    m.degenerate_classes = degenerate;
    Ok(m)
}

/// Threshold per feature from the Max and Avg rows.
pub fn compute_thresholds(
    matrix: &GainRatioMatrix,
    variant: FormulaVariant,
) -> BTreeMap<Feature, f64> {
    matrix
        .max_row
        .iter()
        .filter_map(|(f, &max)| {
            let avg = *matrix.avg_row.get(f)?;
            let mid = 0.5 * (max + avg);
            Some((
                *f,
                match variant {
                    FormulaVariant::TableMean => mid,
                    FormulaVariant::TextFormula => mid + 0.25 * (max - avg),
                },
            ))
        })
        .collect()
}

/// The `k` features with the largest thresholds, largest first; ties keep
/// canonical feature order.
pub fn select_features(
    thresholds: &BTreeMap<Feature, f64>,
    k: usize,
) -> Result<Vec<Feature>, TrainError> {
    if k == 0 {
        return Err(TrainError::ZeroK);
    }
    if k > thresholds.len() {
        return Err(TrainError::KTooLarge {
            k,
            available: thresholds.len(),
        });
    }
    // BTreeMap iterates in canonical order and the sort is stable
    let mut ranked: Vec<(Feature, f64)> = thresholds.iter().map(|(f, v)| (*f, *v)).collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1));
    Ok(ranked.into_iter().take(k).map(|(f, _)| f).collect())
}

/// Full training pass over a labeled table.
pub fn train(
    table: &FeatureTable,
    k: usize,
    variant: FormulaVariant,
    mode: Parallelism,
) -> Result<GenreModel, TrainError> {
    require_labels(table)?;
    let classes = table.classes();
    for c in &classes {
        let n = table
            .rows()
            .iter()
            .filter(|r| r.class_label.as_deref() == Some(c.as_str()))
            .count();
        if n < MIN_ROWS_PER_CLASS {
            log::warn!("class {c:?} has only {n} rows; tertile binning degenerates");
        }
    }

    let class_ranges = compute_class_ranges(table)?;
    let mut matrix = compute_gain_ratio_matrix(table, true, mode)?;
    matrix.threshold_row = compute_thresholds(&matrix, variant);
    let selected_features = select_features(&matrix.threshold_row, k)?;

    let mut bin_edges = BTreeMap::new();
    for f in Feature::ALL {
        let valid: Vec<f64> = table
            .rows()
            .iter()
            .filter(|r| r.vector.is_valid(f))
            .map(|r| r.vector.get(f))
            .collect();
        if let Ok(e) = BinEdges::fit(&valid) {
            bin_edges.insert(f, e);
        }
    }

    Ok(GenreModel {
        classes,
        class_ranges,
        selected_features,
        matrix,
        bin_edges,
        formula_variant: variant,
    })
}

/// On-disk layout of a [`GenreModel`].
#[derive(Debug, Serialize, Deserialize)]
struct ModelDocument {
    version: u32,
    classes: Vec<String>,
    ranges: ClassRanges,
    gain_ratio_matrix: BTreeMap<String, BTreeMap<Feature, f64>>,
    max: BTreeMap<Feature, f64>,
    avg: BTreeMap<Feature, f64>,
    thresholds: BTreeMap<Feature, f64>,
    selected_features: Vec<Feature>,
    bin_edges: BTreeMap<Feature, BinEdges>,
    formula_variant: FormulaVariant,
    #[serde(default)]
    degenerate_classes: Vec<String>,
    gain_ratio_subset: String,
    decision_rule: String,
}

const GAIN_RATIO_SUBSET: &str =
    "per class: each class's own rows, pulse-clarity and feature tertiles re-fit per class";
const DECISION_RULE: &str = "inclusive range containment on every selected feature; \
     ties broken by the smallest sum of |value - range center| / range width; \
     no containing class gives UNCLASSIFIED";

impl GenreModel {
    pub fn to_json(&self) -> Result<String, TrainError> {
        let gain_ratio_matrix = self
            .matrix
            .classes
            .iter()
            .zip(&self.matrix.entries)
            .map(|(c, row)| {
                (
                    c.clone(),
                    self.matrix.features.iter().copied().zip(row.iter().copied()).collect(),
                )
            })
            .collect();
        let doc = ModelDocument {
            version: MODEL_VERSION,
            classes: self.classes.clone(),
            ranges: self.class_ranges.clone(),
            gain_ratio_matrix,
            max: self.matrix.max_row.clone(),
            avg: self.matrix.avg_row.clone(),
            thresholds: self.matrix.threshold_row.clone(),
            selected_features: self.selected_features.clone(),
            bin_edges: self.bin_edges.clone(),
            formula_variant: self.formula_variant,
            degenerate_classes: self.matrix.degenerate_classes.clone(),
            gain_ratio_subset: GAIN_RATIO_SUBSET.to_string(),
            decision_rule: DECISION_RULE.to_string(),
        };
        let mut s = serde_json::to_string_pretty(&doc)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self, TrainError> {
        let doc: ModelDocument = serde_json::from_str(text)?;
        let features: Vec<Feature> = doc.max.keys().copied().collect();
        let entries = doc
            .classes
            .iter()
            .map(|c| {
                let row = doc.gain_ratio_matrix.get(c);
                features
                    .iter()
                    .map(|f| row.and_then(|r| r.get(f)).copied().unwrap_or(0.0))
                    .collect()
            })
            .collect();
        let mut matrix = GainRatioMatrix::from_entries(doc.classes.clone(), features, entries)?;
        // keep the stored rows verbatim rather than recomputing
        matrix.max_row = doc.max;
        matrix.avg_row = doc.avg;
        matrix.threshold_row = doc.thresholds;
        matrix.degenerate_classes = doc.degenerate_classes;
        if doc.selected_features.is_empty() {
            return Err(TrainError::ZeroK);
        }
        Ok(Self {
            classes: doc.classes,
            class_ranges: doc.ranges,
            selected_features: doc.selected_features,
            matrix,
            bin_edges: doc.bin_edges,
            formula_variant: doc.formula_variant,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), TrainError> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, TrainError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}
