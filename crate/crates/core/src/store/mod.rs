//! On-disk formats: NPY matrices, embedding bundles, anchor sets and pair lists.
//!
//! A bundle directory holds `embeddings.npy` and `manifest.jsonl`; an anchor
//! directory holds `anchors.npy` and `anchors.json`; pairs are a CSV with
//! header `id_a,id_b,label[,fold]`.

mod anchors;
mod bundle;
pub mod npy;
mod pairs;

pub use anchors::{AnchorSet, ANCHORS_FILE, ANCHORS_META_FILE};
pub use bundle::{EmbeddingBundle, ManifestRecord, EMBEDDINGS_FILE, MANIFEST_FILE};
pub use npy::{read_matrix, write_matrix};
pub use pairs::{Pair, PairLabel, PairSet};

use std::path::Path;

use crate::error::Result;

pub fn load_bundle(dir: impl AsRef<Path>) -> Result<EmbeddingBundle> {
    EmbeddingBundle::load(dir)
}

pub fn load_anchors(dir: impl AsRef<Path>) -> Result<AnchorSet> {
    AnchorSet::load(dir)
}

pub fn load_pairs(path: impl AsRef<Path>, bundle: &EmbeddingBundle) -> Result<PairSet> {
    PairSet::load(path, bundle)
}
