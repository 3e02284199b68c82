//! Group-level similarity profiles against the text anchors, and the
//! ambiguity gap: how much closer a template sits to its predicted anchor than
//! to the others.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fusion::{self, FusionOptions, TransformMode};
use crate::store::{AnchorSet, EmbeddingBundle};
use crate::vecmath;
use crate::zero_shot;

/// Mean cosine of each group's templates to each anchor.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimilarityProfile {
    pub mode: TransformMode,
    /// Row labels, sorted.
    pub groups: Vec<String>,
    /// Column labels, in anchor order.
    pub anchors: Vec<String>,
    pub matrix: Vec<Vec<f64>>,
    pub sample_counts: Vec<usize>,
}

impl SimilarityProfile {
    pub fn get(&self, group: &str, anchor: &str) -> Option<f64> {
        let g = self.groups.iter().position(|x| x == group)?;
        let a = self.anchors.iter().position(|x| x == anchor)?;
        Some(self.matrix[g][a])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AmbiguityGap {
    pub mode: TransformMode,
    pub per_group: BTreeMap<String, f64>,
    pub sample_counts: BTreeMap<String, usize>,
}

struct GroupSums {
    sums: Vec<f64>,
    count: usize,
}

pub fn similarity_profile(
    bundle: &EmbeddingBundle,
    anchors: &AnchorSet,
    mode: TransformMode,
    opts: FusionOptions,
) -> Result<SimilarityProfile> {
    let transformed = fusion::transform_bundle(bundle, Some(anchors), mode, opts)?;
    let n = anchors.len();
    let mut by_group: BTreeMap<&str, GroupSums> = BTreeMap::new();
    for rec in transformed.records() {
        let emb = transformed.embedding(rec);
        let entry = by_group.entry(&rec.group).or_insert_with(|| GroupSums {
            sums: vec![0.0; n],
            count: 0,
        });
        for (i, t) in anchors.anchors().iter_rows().enumerate() {
            entry.sums[i] += vecmath::cosine(emb, t).map_err(|e| e.in_sample(&rec.id))?;
        }
        entry.count += 1;
    }
    let mut profile = SimilarityProfile {
        mode,
        groups: Vec::with_capacity(by_group.len()),
        anchors: anchors.labels().to_vec(),
        matrix: Vec::with_capacity(by_group.len()),
        sample_counts: Vec::with_capacity(by_group.len()),
    };
    for (group, acc) in by_group {
        profile.groups.push(group.to_owned());
        profile
            .matrix
            .push(acc.sums.iter().map(|s| s / acc.count as f64).collect());
        profile.sample_counts.push(acc.count);
    }
    Ok(profile)
}

/// Per-group mean of `cos(t, T_p) - mean_{i != p} cos(t, T_i)`, where `t` is
/// the template under `mode` and `p` the class predicted from the raw
/// embedding, so every mode is compared over the same class assignment.
pub fn ambiguity_gap(
    bundle: &EmbeddingBundle,
    anchors: &AnchorSet,
    mode: TransformMode,
    opts: FusionOptions,
) -> Result<AmbiguityGap> {
    let mut sums: BTreeMap<String, (f64, usize)> = BTreeMap::new();
    for rec in bundle.records() {
        let raw = bundle.embedding(rec);
        let gap = sample_gap(raw, anchors, mode, opts).map_err(|e| e.in_sample(&rec.id))?;
        let entry = sums.entry(rec.group.clone()).or_insert((0.0, 0));
        entry.0 += gap;
        entry.1 += 1;
    }
    Ok(AmbiguityGap {
        mode,
        sample_counts: sums.iter().map(|(g, &(_, c))| (g.clone(), c)).collect(),
        per_group: sums
            .into_iter()
            .map(|(g, (s, c))| (g, s / c as f64))
            .collect(),
    })
}

fn sample_gap(raw: &[f32], anchors: &AnchorSet, mode: TransformMode, opts: FusionOptions) -> Result<f64> {
    let predicted = zero_shot::predict(raw, anchors)?.predicted_index;
    let template = fusion::fuse(raw, Some(anchors), mode, opts)?.vector;
    let mut own = 0.0;
    let mut others = 0.0;
    for (i, t) in anchors.anchors().iter_rows().enumerate() {
        let c = vecmath::cosine(&template, t)?;
        if i == predicted {
            own = c;
        } else {
            others += c;
        }
    }
    Ok(own - others / (anchors.len() - 1) as f64)
}

/// Writes `group,anchor,mean_cosine,count`, group-major in profile order.
pub fn emit_profile_csv(profile: &SimilarityProfile, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let io = |e: csv::Error| Error::io(path, e.into());
    let mut w = csv::Writer::from_path(path).map_err(io)?;
    w.write_record(["group", "anchor", "mean_cosine", "count"]).map_err(io)?;
    for ((group, row), count) in profile.groups.iter().zip(&profile.matrix).zip(&profile.sample_counts) {
        for (anchor, value) in profile.anchors.iter().zip(row) {
            w.write_record([group.as_str(), anchor, &value.to_string(), &count.to_string()])
                .map_err(io)?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}
