//! Deliberately naive reference implementations, written without touching
//! the optimized code paths. The self-test compares the library against them.

use crate::store::{AnchorSet, EmbeddingBundle, PairLabel};

fn norm(v: &[f32]) -> f64 {
    let mut s = 0.0f64;
    for &x in v {
        s += f64::from(x) * f64::from(x);
    }
    s.sqrt()
}

fn cos(u: &[f32], v: &[f32]) -> f64 {
    let mut d = 0.0f64;
    for i in 0..u.len() {
        d += f64::from(u[i]) * f64::from(v[i]);
    }
    (d / (norm(u) * norm(v))).clamp(-1.0, 1.0)
}

/// Argmax with a strict comparison, so the first maximum wins.
pub fn predict(embedding: &[f32], anchors: &AnchorSet) -> usize {
    let mut best = 0;
    let mut best_sim = f64::NEG_INFINITY;
    for i in 0..anchors.len() {
        let s = cos(embedding, anchors.anchor(i));
        if s > best_sim {
            best_sim = s;
            best = i;
        }
    }
    best
}

/// `(correct, total)` per group, in sorted group order.
pub fn zero_shot_counts(bundle: &EmbeddingBundle, anchors: &AnchorSet) -> Vec<(String, usize, usize)> {
    let mut groups: Vec<String> = bundle.records().iter().map(|r| r.group.clone()).collect();
    groups.sort();
    groups.dedup();
    groups
        .into_iter()
        .map(|g| {
            let mut correct = 0;
            let mut total = 0;
            for rec in bundle.records().iter().filter(|r| r.group == g) {
                total += 1;
                if anchors.labels()[predict(bundle.embedding(rec), anchors)] == g {
                    correct += 1;
                }
            }
            (g, correct, total)
        })
        .collect()
}

fn unit(v: &[f32]) -> Vec<f64> {
    let n = norm(v);
    v.iter().map(|&x| f64::from(x) / n).collect()
}

/// Normalized image plus either the leave-one-out anchor mean (`utie`) or
/// the predicted anchor.
pub fn fuse(embedding: &[f32], anchors: &AnchorSet, utie: bool) -> Vec<f32> {
    let hat = predict(embedding, anchors);
    let n = anchors.len();
    let mut extra = vec![0.0f64; embedding.len()];
    if utie {
        for i in 0..n {
            if i == hat {
                continue;
            }
            let t = unit(anchors.anchor(i));
            for c in 0..extra.len() {
                extra[c] += t[c];
            }
        }
        for e in extra.iter_mut() {
            *e /= (n - 1) as f64;
        }
    } else {
        extra = unit(anchors.anchor(hat));
    }
    let base = unit(embedding);
    (0..base.len()).map(|c| (base[c] + extra[c]) as f32).collect()
}

fn correct_at(scores: &[f64], labels: &[PairLabel], t: f64) -> usize {
    let mut c = 0;
    for i in 0..scores.len() {
        let accept = scores[i] >= t;
        if accept == (labels[i] == PairLabel::Genuine) {
            c += 1;
        }
    }
    c
}

/// Tries every candidate threshold independently; returns
/// `(threshold, correct)` with the lowest threshold among the best.
pub fn best_threshold(scores: &[f64], labels: &[PairLabel], margin: f64) -> (f64, usize) {
    let mut distinct = scores.to_vec();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    let mut candidates = vec![distinct[0] - margin];
    for w in distinct.windows(2) {
        candidates.push((w[0] + w[1]) / 2.0);
    }
    candidates.push(distinct[distinct.len() - 1] + margin);

    let mut best = (candidates[0], correct_at(scores, labels, candidates[0]));
    for &t in &candidates[1..] {
        let c = correct_at(scores, labels, t);
        if c > best.1 {
            best = (t, c);
        }
    }
    best
}

/// Leave-one-fold-out accuracy, looping over every fold and every pair.
pub fn kfold(scores: &[f64], labels: &[PairLabel], folds: &[usize], margin: f64) -> (f64, Vec<f64>) {
    let k = folds.iter().max().unwrap() + 1;
    let mut total = 0.0;
    let mut thresholds = Vec::new();
    for f in 0..k {
        let mut tr_s = Vec::new();
        let mut tr_l = Vec::new();
        let mut te_s = Vec::new();
        let mut te_l = Vec::new();
        for i in 0..scores.len() {
            if folds[i] == f {
                te_s.push(scores[i]);
                te_l.push(labels[i]);
            } else {
                tr_s.push(scores[i]);
                tr_l.push(labels[i]);
            }
        }
        let (t, _) = best_threshold(&tr_s, &tr_l, margin);
        thresholds.push(t);
        total += 100.0 * correct_at(&te_s, &te_l, t) as f64 / te_s.len() as f64;
    }
    (total / k as f64, thresholds)
}

/// Cosine score of a pair of embeddings.
pub fn pair_score(a: &[f32], b: &[f32]) -> f64 {
    cos(a, b)
}
