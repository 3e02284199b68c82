//! Zero-shot demographic prediction against text anchors.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::bias;
use crate::error::{Error, Result};
use crate::store::{AnchorSet, EmbeddingBundle};
use crate::vecmath;

pub const PLACEHOLDER: &str = "{label}";

/// Default prompt used to build demographic text anchors.
pub const DEFAULT_TEMPLATE: &str = "A photo of a {label} person.";

/// Substitutes `label` for the single `{label}` token. No article fix-ups.
pub fn render_prompt(template: &str, label: &str) -> Result<String> {
    match template.matches(PLACEHOLDER).count() {
        0 => Err(Error::MissingPlaceholder),
        1 => Ok(template.replacen(PLACEHOLDER, label, 1)),
        n => Err(Error::MultiplePlaceholders(n)),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Prediction {
    pub predicted_index: usize,
    pub similarities: Vec<f64>,
}

/// Index of the first maximum; later ties never displace an earlier winner.
pub(crate) fn first_argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Cosine against every anchor; the prediction is the lowest index attaining
/// the maximum similarity.
pub fn predict(embedding: &[f32], anchors: &AnchorSet) -> Result<Prediction> {
    let similarities = anchors
        .anchors()
        .iter_rows()
        .map(|t| vecmath::cosine(embedding, t))
        .collect::<Result<Vec<_>>>()?;
    Ok(Prediction {
        predicted_index: first_argmax(&similarities),
        similarities,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct GroupCount {
    pub correct: usize,
    pub total: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ZeroShotReport {
    pub per_group_accuracy: BTreeMap<String, f64>,
    pub counts: BTreeMap<String, GroupCount>,
    pub mean_accuracy: f64,
}

/// Percent of each group's samples whose predicted label equals their
/// manifest group, plus the unweighted mean over groups.
pub fn zero_shot_accuracy(bundle: &EmbeddingBundle, anchors: &AnchorSet) -> Result<ZeroShotReport> {
    for group in bundle.groups() {
        if anchors.index_of(group).is_none() {
            return Err(Error::UnknownGroupLabel(group.to_owned()));
        }
    }
    let mut counts: BTreeMap<String, GroupCount> = BTreeMap::new();
    for rec in bundle.records() {
        let pred = predict(bundle.embedding(rec), anchors).map_err(|e| e.in_sample(&rec.id))?;
        let entry = counts
            .entry(rec.group.clone())
            .or_insert(GroupCount { correct: 0, total: 0 });
        entry.total += 1;
        if anchors.labels()[pred.predicted_index] == rec.group {
            entry.correct += 1;
        }
    }
    let per_group_accuracy: BTreeMap<String, f64> = counts
        .iter()
        .map(|(g, c)| (g.clone(), percent(c.correct, c.total)))
        .collect();
    let accs: Vec<f64> = per_group_accuracy.values().copied().collect();
    Ok(ZeroShotReport {
        mean_accuracy: bias::mean_accuracy(&accs)?,
        per_group_accuracy,
        counts,
    })
}

pub(crate) fn percent(hits: usize, total: usize) -> f64 {
    100.0 * hits as f64 / total as f64
}
