//! Audio feature extraction, gain-ratio feature selection against
//! pulse-clarity tertiles, and range-matching genre classification.
//!
//! The pipeline runs `wav` → `features` → `training` → `classifier`;
//! `infotheory` holds the entropy and gain-ratio measures, `synth` generates
//! deterministic test signals and corpora, and `par` switches batch work
//! between rayon and a plain loop.

pub mod batch;
pub mod classifier;
pub mod dsp;
pub mod features;
pub mod infotheory;
pub mod par;
pub mod synth;
pub mod table;
pub mod training;
pub mod wav;

pub use classifier::{classify, evaluate, ClassificationResult, EvaluationReport, UNCLASSIFIED};
pub use features::{extract_all, Feature, FeatureVector};
pub use par::Parallelism;
pub use table::{FeatureRow, FeatureTable};
pub use training::{train, FormulaVariant, GainRatioMatrix, GenreModel};
pub use wav::{parse_wav, AudioBuffer};
