//! Brute-force reference code shared by the integration tests. Only reads raw
//! data out of the library types; every computation is redone here.

#![allow(dead_code)]

use utie_core::{AnchorSet, EmbeddingBundle, PairLabel, PairSet};

pub fn norm(v: &[f32]) -> f64 {
    v.iter().map(|&x| f64::from(x) * f64::from(x)).sum::<f64>().sqrt()
}

pub fn cosine(u: &[f32], v: &[f32]) -> f64 {
    let mut d = 0.0f64;
    for i in 0..u.len() {
        d += f64::from(u[i]) * f64::from(v[i]);
    }
    (d / (norm(u) * norm(v))).clamp(-1.0, 1.0)
}

/// First index holding the maximum cosine.
pub fn argmax(embedding: &[f32], anchors: &AnchorSet) -> usize {
    let sims: Vec<f64> = (0..anchors.len()).map(|i| cosine(embedding, anchors.anchor(i))).collect();
    let top = sims.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    sims.iter().position(|&s| s == top).unwrap()
}

/// `(group, correct, total)` sorted by group.
pub fn zero_shot(bundle: &EmbeddingBundle, anchors: &AnchorSet) -> Vec<(String, usize, usize)> {
    let mut out: Vec<(String, usize, usize)> = Vec::new();
    for rec in bundle.records() {
        let hit = anchors.labels()[argmax(bundle.embedding(rec), anchors)] == rec.group;
        match out.iter_mut().find(|(g, _, _)| *g == rec.group) {
            Some(e) => {
                e.1 += hit as usize;
                e.2 += 1;
            }
            None => out.push((rec.group.clone(), hit as usize, 1)),
        }
    }
    out.sort();
    out
}

fn unit(v: &[f32]) -> Vec<f64> {
    let n = norm(v);
    v.iter().map(|&x| f64::from(x) / n).collect()
}

#[derive(Clone, Copy)]
pub enum Fusion {
    LeaveOneOut,
    Predicted,
}

pub fn fuse(embedding: &[f32], anchors: &AnchorSet, how: Fusion) -> Vec<f32> {
    let hat = argmax(embedding, anchors);
    let n = anchors.len();
    let image = unit(embedding);
    let text: Vec<f64> = match how {
        Fusion::Predicted => unit(anchors.anchor(hat)),
        Fusion::LeaveOneOut => {
            let units: Vec<Vec<f64>> = (0..n).filter(|&i| i != hat).map(|i| unit(anchors.anchor(i))).collect();
            (0..image.len())
                .map(|c| units.iter().map(|u| u[c]).sum::<f64>() / (n - 1) as f64)
                .collect()
        }
    };
    image.iter().zip(&text).map(|(a, b)| (a + b) as f32).collect()
}

fn correct_at(scores: &[f64], labels: &[PairLabel], t: f64) -> usize {
    scores
        .iter()
        .zip(labels)
        .filter(|(&s, &l)| (s >= t) == (l == PairLabel::Genuine))
        .count()
}

/// Exhaustive sweep over midpoints plus the two sentinels at `min - 1` and
/// `max + 1`. Ties resolve to the lowest threshold.
pub fn best_threshold(scores: &[f64], labels: &[PairLabel]) -> (f64, usize) {
    let mut s = scores.to_vec();
    s.sort_by(|a, b| a.partial_cmp(b).unwrap());
    s.dedup();
    let mut cands = vec![s[0] - 1.0, s[s.len() - 1] + 1.0];
    for i in 1..s.len() {
        cands.push((s[i - 1] + s[i]) / 2.0);
    }
    cands.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let scored: Vec<(f64, usize)> = cands.iter().map(|&t| (t, correct_at(scores, labels, t))).collect();
    let top = scored.iter().map(|x| x.1).max().unwrap();
    *scored.iter().find(|x| x.1 == top).unwrap()
}

pub fn kfold(scores: &[f64], labels: &[PairLabel], folds: &[usize]) -> (f64, Vec<f64>) {
    let k = folds.iter().copied().max().unwrap() + 1;
    let mut accs = Vec::new();
    let mut ts = Vec::new();
    for f in 0..k {
        let train: Vec<usize> = (0..scores.len()).filter(|&i| folds[i] != f).collect();
        let test: Vec<usize> = (0..scores.len()).filter(|&i| folds[i] == f).collect();
        let ts_s: Vec<f64> = train.iter().map(|&i| scores[i]).collect();
        let ts_l: Vec<PairLabel> = train.iter().map(|&i| labels[i]).collect();
        let (t, _) = best_threshold(&ts_s, &ts_l);
        let te_s: Vec<f64> = test.iter().map(|&i| scores[i]).collect();
        let te_l: Vec<PairLabel> = test.iter().map(|&i| labels[i]).collect();
        accs.push(100.0 * correct_at(&te_s, &te_l, t) as f64 / test.len() as f64);
        ts.push(t);
    }
    (accs.iter().sum::<f64>() / k as f64, ts)
}

/// Scores, labels and folds for a pair set. Fold-less sets use ten
/// contiguous blocks.
pub fn score(bundle: &EmbeddingBundle, pairs: &PairSet) -> (Vec<f64>, Vec<PairLabel>, Vec<usize>) {
    let p = pairs.pairs();
    let n = p.len();
    let scores = p
        .iter()
        .map(|x| cosine(bundle.embedding_of(&x.id_a).unwrap(), bundle.embedding_of(&x.id_b).unwrap()))
        .collect();
    let labels = p.iter().map(|x| x.label).collect();
    let folds = p.iter().enumerate().map(|(i, x)| x.fold.unwrap_or(i * 10 / n)).collect();
    (scores, labels, folds)
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

pub fn sample_std(xs: &[f64]) -> f64 {
    let m = mean(xs);
    (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}

pub fn ser(xs: &[f64]) -> f64 {
    let errs: Vec<f64> = xs.iter().map(|a| 100.0 - a).collect();
    errs.iter().cloned().fold(f64::MIN, f64::max) / errs.iter().cloned().fold(f64::MAX, f64::min)
}
