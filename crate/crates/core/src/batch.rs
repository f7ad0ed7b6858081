//! File-level batch helpers shared by the command-line front end and benches.

use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::classifier::{classify, ClassificationResult, ClassifyError};
use crate::features::{extract_all, FeatureError, FeatureVector};
use crate::par::{map_ordered, Parallelism};
use crate::table::FeatureTable;
use crate::training::GenreModel;
use crate::wav::{read_wav, AudioBuffer, WavError};

#[derive(Debug, Error)]
pub enum BatchError {
    #[error(transparent)]
    Wav(#[from] WavError),
    #[error(transparent)]
    Feature(#[from] FeatureError),
}

/// Extracts features from each buffer, preserving input order.
pub fn extract_buffers(
    buffers: &[AudioBuffer],
    mode: Parallelism,
) -> Vec<Result<FeatureVector, FeatureError>> {
    map_ordered(buffers, mode, extract_all)
}

/// Decodes and extracts each path, preserving input order.
pub fn extract_paths(
    paths: &[PathBuf],
    mode: Parallelism,
) -> Vec<Result<FeatureVector, BatchError>> {
    map_ordered(paths, mode, |p| extract_path(p))
}

pub fn extract_path(path: &Path) -> Result<FeatureVector, BatchError> {
    let buf = read_wav(path)?;
    Ok(extract_all(&buf)?)
}

/// Classifies every row of a table against `model`, preserving row order.
pub fn classify_table(
    table: &FeatureTable,
    model: &GenreModel,
    mode: Parallelism,
) -> Vec<Result<ClassificationResult, ClassifyError>> {
    map_ordered(table.rows(), mode, |r| classify(&r.file_id, &r.vector, model))
}

/// File stem used as the row identifier for a WAV path.
pub fn file_id_for(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}
