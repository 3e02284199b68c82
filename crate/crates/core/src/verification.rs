//! Pair scoring and k-fold verification accuracy.
//!
//! A pair is accepted as genuine when its cosine score is at or above the
//! threshold. Thresholds are picked on the training folds by exhaustive search
//! over midpoints between consecutive distinct scores, plus one sentinel below
//! the minimum (accept everything) and one above the maximum (reject
//! everything).

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fusion::{self, FusionOptions, TransformMode};
use crate::store::{AnchorSet, EmbeddingBundle, PairLabel, PairSet};
use crate::vecmath;
use crate::zero_shot::percent;

pub const DEFAULT_FOLDS: usize = 10;

/// Distance of the sentinel thresholds from the extreme scores.
pub const SENTINEL_MARGIN: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScoredPairs {
    pub scores: Vec<f64>,
    pub labels: Vec<PairLabel>,
    pub folds: Vec<usize>,
}

impl ScoredPairs {
    pub fn new(scores: Vec<f64>, labels: Vec<PairLabel>, folds: Vec<usize>) -> Result<Self> {
        if scores.len() != labels.len() || scores.len() != folds.len() {
            return Err(Error::DimensionMismatch {
                left: scores.len(),
                right: labels.len().min(folds.len()),
            });
        }
        Ok(ScoredPairs { scores, labels, folds })
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    pub fn fold_count(&self) -> usize {
        self.folds.iter().max().map_or(0, |m| m + 1)
    }
}

/// Contiguous block fold for the `index`-th of `total` pairs.
pub fn block_fold(index: usize, total: usize, folds: usize) -> usize {
    index * folds / total
}

/// Cosine score per pair. Fold-less pair sets get [`DEFAULT_FOLDS`]
/// contiguous blocks in file order.
pub fn score_pairs(bundle: &EmbeddingBundle, pairs: &PairSet) -> Result<ScoredPairs> {
    score_pairs_with_folds(bundle, pairs, DEFAULT_FOLDS)
}

pub fn score_pairs_with_folds(bundle: &EmbeddingBundle, pairs: &PairSet, default_folds: usize) -> Result<ScoredPairs> {
    let total = pairs.len();
    let mut scores = Vec::with_capacity(total);
    let mut labels = Vec::with_capacity(total);
    let mut folds = Vec::with_capacity(total);
    for (index, p) in pairs.pairs().iter().enumerate() {
        let lookup = |id: &String| {
            bundle.embedding_of(id).ok_or_else(|| Error::DanglingPairId {
                index,
                id: id.clone(),
            })
        };
        let (a, b) = (lookup(&p.id_a)?, lookup(&p.id_b)?);
        scores.push(vecmath::cosine(a, b).map_err(|e| e.in_pair(index))?);
        labels.push(p.label);
        folds.push(p.fold.unwrap_or_else(|| block_fold(index, total, default_folds)));
    }
    ScoredPairs::new(scores, labels, folds)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Threshold {
    pub threshold: f64,
    /// Percent of pairs classified correctly at `threshold`.
    pub accuracy: f64,
    pub correct: usize,
}

/// Best accuracy threshold; ties resolve to the lowest threshold.
pub fn best_threshold(scores: &[f64], labels: &[PairLabel]) -> Result<Threshold> {
    if scores.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            left: scores.len(),
            right: labels.len(),
        });
    }
    if let Some(i) = scores.iter().position(|s| !s.is_finite()) {
        return Err(Error::NonFiniteInput(i));
    }
    let genuine_total = labels.iter().filter(|l| l.is_genuine()).count();
    if genuine_total == 0 || genuine_total == labels.len() {
        return Err(Error::DegenerateLabels);
    }

    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));

    // Accept everything.
    let mut best = Threshold {
        threshold: scores[order[0]] - SENTINEL_MARGIN,
        accuracy: 0.0,
        correct: genuine_total,
    };
    // Running tallies of pairs strictly below the current candidate.
    let mut genuine_below = 0usize;
    let mut impostor_below = 0usize;
    let mut i = 0;
    while i < order.len() {
        let value = scores[order[i]];
        while i < order.len() && scores[order[i]] == value {
            match labels[order[i]] {
                PairLabel::Genuine => genuine_below += 1,
                PairLabel::Impostor => impostor_below += 1,
            }
            i += 1;
        }
        let threshold = match order.get(i) {
            Some(&next) => (value + scores[next]) / 2.0,
            None => value + SENTINEL_MARGIN,
        };
        let correct = genuine_total - genuine_below + impostor_below;
        if correct > best.correct {
            best = Threshold {
                threshold,
                accuracy: 0.0,
                correct,
            };
        }
    }
    best.accuracy = percent(best.correct, scores.len());
    Ok(best)
}

/// Percent of pairs classified correctly at `threshold`.
pub fn accuracy_at(scores: &[f64], labels: &[PairLabel], threshold: f64) -> f64 {
    let correct = scores
        .iter()
        .zip(labels)
        .filter(|(&s, l)| (s >= threshold) == l.is_genuine())
        .count();
    percent(correct, scores.len())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KFoldResult {
    /// Unweighted mean of the per-fold test accuracies.
    pub accuracy: f64,
    pub thresholds: Vec<f64>,
    pub fold_accuracies: Vec<f64>,
    pub fold_sizes: Vec<usize>,
}

/// For each fold, fits a threshold on the other folds and scores the held-out
/// fold with it.
pub fn kfold_accuracy(scored: &ScoredPairs) -> Result<KFoldResult> {
    let k = scored.fold_count();
    if k < 2 {
        return Err(Error::FoldTooSmall {
            fold: 0,
            reason: format!("need at least 2 folds, found {k}"),
        });
    }
    let mut sizes = vec![0usize; k];
    for &f in &scored.folds {
        sizes[f] += 1;
    }
    if let Some(fold) = sizes.iter().position(|&n| n == 0) {
        return Err(Error::FoldTooSmall {
            fold,
            reason: "no pairs".into(),
        });
    }
    let mut thresholds = Vec::with_capacity(k);
    let mut fold_accuracies = Vec::with_capacity(k);
    let mut fold_sizes = Vec::with_capacity(k);
    for fold in 0..k {
        let mut train_scores = Vec::new();
        let mut train_labels = Vec::new();
        let mut test_scores = Vec::new();
        let mut test_labels = Vec::new();
        for ((&s, &l), &f) in scored.scores.iter().zip(&scored.labels).zip(&scored.folds) {
            if f == fold {
                test_scores.push(s);
                test_labels.push(l);
            } else {
                train_scores.push(s);
                train_labels.push(l);
            }
        }
        let fit = best_threshold(&train_scores, &train_labels)?;
        thresholds.push(fit.threshold);
        fold_accuracies.push(accuracy_at(&test_scores, &test_labels, fit.threshold));
        fold_sizes.push(test_scores.len());
    }
    let accuracy = fold_accuracies.iter().sum::<f64>() / k as f64;
    Ok(KFoldResult {
        accuracy,
        thresholds,
        fold_accuracies,
        fold_sizes,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupAccuracy {
    pub group: String,
    pub accuracy: f64,
    pub threshold_trace: Vec<f64>,
    pub fold_accuracies: Vec<f64>,
    pub fold_count: usize,
    pub pair_count: usize,
}

/// Transforms the bundle once, then runs k-fold verification per group.
/// Output is ordered by group name.
pub fn evaluate_groups(
    bundle: &EmbeddingBundle,
    anchors: Option<&AnchorSet>,
    pairs_by_group: &BTreeMap<String, PairSet>,
    mode: TransformMode,
    opts: FusionOptions,
) -> Result<Vec<GroupAccuracy>> {
    for pairs in pairs_by_group.values() {
        pairs.check_ids(bundle)?;
    }
    let transformed = fusion::transform_bundle(bundle, anchors, mode, opts)?;
    pairs_by_group
        .iter()
        .map(|(group, pairs)| {
            let scored = score_pairs(&transformed, pairs)?;
            let result = kfold_accuracy(&scored)?;
            Ok(GroupAccuracy {
                group: group.clone(),
                accuracy: result.accuracy,
                fold_count: result.thresholds.len(),
                threshold_trace: result.thresholds,
                fold_accuracies: result.fold_accuracies,
                pair_count: pairs.len(),
            })
        })
        .collect()
}
