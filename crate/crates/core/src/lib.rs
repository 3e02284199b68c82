//! Text-anchor fusion for vision-language face embeddings, with the
//! verification and bias-metric tooling needed to measure its effect.
//!
//! Pipeline: load an [`EmbeddingBundle`] and an [`AnchorSet`], build face
//! templates with [`fusion::transform_bundle`] (IE, UTIE or IE+PTE), score
//! verification pairs per demographic group with
//! [`verification::evaluate_groups`], then summarize with
//! [`bias::bias_report`] (mean, sample STD, skewed error ratio).

pub mod bias;
pub mod diagnostics;
pub mod error;
pub mod fusion;
pub mod matrix;
pub mod oracle;
pub mod published;
pub mod selftest;
pub mod store;
pub mod synth;
pub mod vecmath;
pub mod verification;
pub mod zero_shot;

pub use bias::{bias_report, BiasReport};
pub use error::{Error, Result};
pub use fusion::{FusedEmbedding, FusionOptions, TransformMode};
pub use matrix::Matrix;
pub use store::{AnchorSet, EmbeddingBundle, ManifestRecord, Pair, PairLabel, PairSet};
pub use synth::{SynthConfig, SynthData};
pub use verification::{GroupAccuracy, ScoredPairs};
pub use zero_shot::{Prediction, ZeroShotReport};
