//! Equal-width tertile discretization and the attribute-selection measures:
//! class entropy, expected information after a split, information gain,
//! split information and gain ratio. All logarithms are base 2.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InfoError {
    #[error("dataset has no rows")]
    EmptyDataset,
    #[error("unknown attribute {0:?}")]
    UnknownAttribute(String),
    #[error("row has {found} values but the dataset has {expected} attributes")]
    RowArity { expected: usize, found: usize },
    #[error("cannot discretize an empty or non-finite value set")]
    NoValues,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BinLabel {
    Low,
    Medium,
    High,
}

impl BinLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            BinLabel::Low => "low",
            BinLabel::Medium => "medium",
            BinLabel::High => "high",
        }
    }
}

impl fmt::Display for BinLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Bins `[lo, cut1)`, `[cut1, cut2)` and `[cut2, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinEdges {
    pub lo: f64,
    pub hi: f64,
    pub cut1: f64,
    pub cut2: f64,
}

impl BinEdges {
    /// Equal-width tertiles over the observed range of `values`.
    pub fn fit(values: &[f64]) -> Result<Self, InfoError> {
        if values.is_empty() || values.iter().any(|v| !v.is_finite()) {
            return Err(InfoError::NoValues);
        }
        let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let width = hi - lo;
        Ok(Self {
            lo,
            hi,
            cut1: lo + width / 3.0,
            cut2: lo + 2.0 * width / 3.0,
        })
    }

    pub fn is_degenerate(&self) -> bool {
        self.hi == self.lo
    }

    /// Left-closed membership; values outside the fitted range fall into the
    /// nearest end bin.
    pub fn label(&self, v: f64) -> BinLabel {
        if self.is_degenerate() {
            BinLabel::Medium
        } else if v < self.cut1 {
            BinLabel::Low
        } else if v < self.cut2 {
            BinLabel::Medium
        } else {
            BinLabel::High
        }
    }
}

pub fn discretize_equal_width(values: &[f64]) -> Result<(BinEdges, Vec<BinLabel>), InfoError> {
    let edges = BinEdges::fit(values)?;
    let labels = values.iter().map(|&v| edges.label(v)).collect();
    Ok((edges, labels))
}

/// Tuples of categorical attribute values with a class label.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DiscreteDataset {
    attributes: Vec<String>,
    class_names: Vec<String>,
    rows: Vec<(Vec<String>, String)>,
}

impl DiscreteDataset {
    pub fn new<S: Into<String>>(attributes: impl IntoIterator<Item = S>) -> Self {
        Self {
            attributes: attributes.into_iter().map(Into::into).collect(),
            ..Self::default()
        }
    }

    pub fn push<S: Into<String>>(
        &mut self,
        values: impl IntoIterator<Item = S>,
        class: impl Into<String>,
    ) -> Result<(), InfoError> {
        let values: Vec<String> = values.into_iter().map(Into::into).collect();
        if values.len() != self.attributes.len() {
            return Err(InfoError::RowArity {
                expected: self.attributes.len(),
                found: values.len(),
            });
        }
        let class = class.into();
        if !self.class_names.contains(&class) {
            self.class_names.push(class.clone());
        }
        self.rows.push((values, class));
        Ok(())
    }

    pub fn attributes(&self) -> &[String] {
        &self.attributes
    }

    /// Class labels in order of first appearance.
    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    fn column(&self, attribute: &str) -> Result<usize, InfoError> {
        self.attributes
            .iter()
            .position(|a| a == attribute)
            .ok_or_else(|| InfoError::UnknownAttribute(attribute.to_string()))
    }

    fn class_counts<'a>(rows: impl Iterator<Item = &'a str>) -> Vec<usize> {
        let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
        for c in rows {
            *counts.entry(c).or_default() += 1;
        }
        counts.into_values().collect()
    }

    /// Rows grouped by the value of one attribute, as class-label lists.
    fn partitions(&self, attribute: &str) -> Result<BTreeMap<&str, Vec<&str>>, InfoError> {
        if self.rows.is_empty() {
            return Err(InfoError::EmptyDataset);
        }
        let col = self.column(attribute)?;
        let mut parts: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
        for (values, class) in &self.rows {
            parts.entry(values[col].as_str()).or_default().push(class);
        }
        Ok(parts)
    }
}

/// `−Σ p log2 p` over the non-zero counts.
pub fn entropy(class_counts: &[usize]) -> Result<f64, InfoError> {
    let total: usize = class_counts.iter().sum();
    if total == 0 {
        return Err(InfoError::EmptyDataset);
    }
    let total = total as f64;
    Ok(class_counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / total;
            -p * p.log2()
        })
        .sum())
}

/// Entropy of the class column of the whole dataset.
pub fn class_entropy(ds: &DiscreteDataset) -> Result<f64, InfoError> {
    entropy(&DiscreteDataset::class_counts(
        ds.rows.iter().map(|(_, c)| c.as_str()),
    ))
}

/// Expected information still needed after partitioning on `attribute`.
pub fn expected_info(ds: &DiscreteDataset, attribute: &str) -> Result<f64, InfoError> {
    let n = ds.len() as f64;
    let mut acc = 0.0;
    for part in ds.partitions(attribute)?.values() {
        let w = part.len() as f64 / n;
        acc += w * entropy(&DiscreteDataset::class_counts(part.iter().copied()))?;
    }
    Ok(acc)
}

pub fn gain(ds: &DiscreteDataset, attribute: &str) -> Result<f64, InfoError> {
    let info_a = expected_info(ds, attribute)?;
    Ok(class_entropy(ds)? - info_a)
}

/// Entropy of the partition sizes induced by `attribute`, ignoring classes.
pub fn split_info(ds: &DiscreteDataset, attribute: &str) -> Result<f64, InfoError> {
    let sizes: Vec<usize> = ds.partitions(attribute)?.values().map(Vec::len).collect();
    entropy(&sizes)
}

/// `gain / split_info`, defined as 0 when the attribute does not split.
pub fn gain_ratio(ds: &DiscreteDataset, attribute: &str) -> Result<f64, InfoError> {
    let split = split_info(ds, attribute)?;
    if split == 0.0 {
        return Ok(0.0);
    }
    Ok(gain(ds, attribute)? / split)
}

/// The attribute with the highest gain ratio; ties go to the earlier attribute.
pub fn splitting_attribute(ds: &DiscreteDataset) -> Result<(String, f64), InfoError> {
    let mut best: Option<(String, f64)> = None;
    for a in ds.attributes() {
        let r = gain_ratio(ds, a)?;
        if best.as_ref().is_none_or(|(_, b)| r > *b) {
            best = Some((a.clone(), r));
        }
    }
    best.ok_or(InfoError::EmptyDataset)
}
