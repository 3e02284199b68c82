//! Face-template construction: plain image embedding (IE), image embedding
//! enriched with the mean of the non-predicted text anchors (UTIE), and the
//! counter-concept that adds the predicted anchor instead (IE+PTE).
//!
//! By default the image embedding and every anchor are unit-normalized before
//! they are added, so the fusion strength does not depend on encoder output
//! scale. [`FusionOptions::raw`] adds the vectors as stored. The sum itself
//! is never re-normalized; verification uses cosine, which ignores scale.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::store::{AnchorSet, EmbeddingBundle};
use crate::vecmath;
use crate::zero_shot;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TransformMode {
    #[serde(rename = "ie")]
    Ie,
    #[serde(rename = "utie")]
    Utie,
    #[serde(rename = "ie_pte")]
    IePte,
}

impl TransformMode {
    pub const ALL: [TransformMode; 3] = [TransformMode::Ie, TransformMode::Utie, TransformMode::IePte];

    pub fn as_str(self) -> &'static str {
        match self {
            TransformMode::Ie => "ie",
            TransformMode::Utie => "utie",
            TransformMode::IePte => "ie_pte",
        }
    }

    /// Display name used in report tables.
    pub fn display_name(self) -> &'static str {
        match self {
            TransformMode::Ie => "IE",
            TransformMode::Utie => "UTIE",
            TransformMode::IePte => "IE+PTE",
        }
    }

    pub fn needs_anchors(self) -> bool {
        self != TransformMode::Ie
    }
}

impl fmt::Display for TransformMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TransformMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ie" => Ok(TransformMode::Ie),
            "utie" => Ok(TransformMode::Utie),
            "ie_pte" | "ie+pte" | "ie-pte" => Ok(TransformMode::IePte),
            _ => Err(Error::UnknownMode(s.to_owned())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FusionOptions {
    /// Unit-normalize the image embedding and anchors before adding them.
    pub normalize: bool,
}

impl Default for FusionOptions {
    fn default() -> Self {
        FusionOptions { normalize: true }
    }
}

impl FusionOptions {
    pub fn raw() -> Self {
        FusionOptions { normalize: false }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FusedEmbedding {
    pub vector: Vec<f32>,
    pub mode: TransformMode,
    /// Zero-shot class of the untransformed embedding; `None` for IE.
    pub predicted_index: Option<usize>,
}

fn anchor_f64(anchors: &AnchorSet, i: usize, opts: FusionOptions) -> Vec<f64> {
    if opts.normalize {
        anchors.unit_anchor(i).to_vec()
    } else {
        anchors.anchor(i).iter().map(|&x| f64::from(x)).collect()
    }
}

fn image_f64(embedding: &[f32], opts: FusionOptions) -> Result<Vec<f64>> {
    if opts.normalize {
        vecmath::normalize_f64(embedding)
    } else {
        vecmath::l2_norm(embedding)?;
        Ok(embedding.iter().map(|&x| f64::from(x)).collect())
    }
}

fn loo_mean_f64(anchors: &AnchorSet, excluded: usize, opts: FusionOptions) -> Result<Vec<f64>> {
    let n = anchors.len();
    if n < 2 {
        return Err(Error::DegenerateAnchorSet(n));
    }
    if excluded >= n {
        return Err(Error::IndexOutOfRange { index: excluded, len: n });
    }
    let mut acc = vec![0.0f64; anchors.dim()];
    for i in (0..n).filter(|&i| i != excluded) {
        for (a, x) in acc.iter_mut().zip(anchor_f64(anchors, i, opts)) {
            *a += x;
        }
    }
    let denom = (n - 1) as f64;
    acc.iter_mut().for_each(|a| *a /= denom);
    Ok(acc)
}

/// Mean of the unit-normalized anchors, skipping `excluded`.
pub fn leave_one_out_mean(anchors: &AnchorSet, excluded: usize) -> Result<Vec<f32>> {
    Ok(loo_mean_f64(anchors, excluded, FusionOptions::default())?
        .into_iter()
        .map(|x| x as f32)
        .collect())
}

fn add(base: Vec<f64>, other: &[f64]) -> Vec<f32> {
    base.iter().zip(other).map(|(a, b)| (a + b) as f32).collect()
}

pub fn utie(embedding: &[f32], anchors: &AnchorSet) -> Result<FusedEmbedding> {
    fuse(embedding, Some(anchors), TransformMode::Utie, FusionOptions::default())
}

pub fn ie_pte(embedding: &[f32], anchors: &AnchorSet) -> Result<FusedEmbedding> {
    fuse(embedding, Some(anchors), TransformMode::IePte, FusionOptions::default())
}

/// Builds the face template for one embedding under `mode`.
///
/// The zero-shot class is always taken from the untransformed embedding.
pub fn fuse(
    embedding: &[f32],
    anchors: Option<&AnchorSet>,
    mode: TransformMode,
    opts: FusionOptions,
) -> Result<FusedEmbedding> {
    if mode == TransformMode::Ie {
        let base = image_f64(embedding, opts)?;
        return Ok(FusedEmbedding {
            vector: base.into_iter().map(|x| x as f32).collect(),
            mode,
            predicted_index: None,
        });
    }
    let anchors = anchors.ok_or(Error::AnchorsRequired(mode.as_str()))?;
    let predicted = zero_shot::predict(embedding, anchors)?.predicted_index;
    let base = image_f64(embedding, opts)?;
    let vector = match mode {
        TransformMode::Utie => add(base, &loo_mean_f64(anchors, predicted, opts)?),
        TransformMode::IePte => add(base, &anchor_f64(anchors, predicted, opts)),
        TransformMode::Ie => unreachable!(),
    };
    Ok(FusedEmbedding {
        vector,
        mode,
        predicted_index: Some(predicted),
    })
}

/// Applies `mode` to every row, keeping the manifest and row order.
pub fn transform_bundle(
    bundle: &EmbeddingBundle,
    anchors: Option<&AnchorSet>,
    mode: TransformMode,
    opts: FusionOptions,
) -> Result<EmbeddingBundle> {
    if mode.needs_anchors() && anchors.is_none() {
        return Err(Error::AnchorsRequired(mode.as_str()));
    }
    let mut ids = vec![""; bundle.len()];
    for rec in bundle.records() {
        ids[rec.row] = &rec.id;
    }
    let source = bundle.embeddings();
    let mut data = Vec::with_capacity(source.as_slice().len());
    for (row, id) in source.iter_rows().zip(ids) {
        let fused = fuse(row, anchors, mode, opts).map_err(|e| e.in_sample(id))?;
        data.extend_from_slice(&fused.vector);
    }
    bundle.with_embeddings(Matrix::new(source.rows(), source.cols(), data)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::store::ManifestRecord;
    use crate::vecmath::cosine;
    use proptest::prelude::*;

    fn unit(n: usize, i: usize) -> Vec<f32> {
        (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()
    }

    fn eye_anchors(n: usize) -> AnchorSet {
        let rows: Vec<Vec<f32>> = (0..n).map(|i| unit(n, i)).collect();
        let labels = (0..n).map(|i| format!("g{i}")).collect();
        AnchorSet::new(Matrix::from_rows(&rows).unwrap(), labels, "{label}", "t").unwrap()
    }

    fn close(a: &[f32], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (f64::from(*x) - y).abs() <= tol)
    }

    #[test]
    fn mode_names() {
        for m in TransformMode::ALL {
            assert_eq!(m.as_str().parse::<TransformMode>().unwrap(), m);
        }
        assert_eq!("IE+PTE".parse::<TransformMode>().unwrap(), TransformMode::IePte);
        assert!(matches!("pte".parse::<TransformMode>(), Err(Error::UnknownMode(_))));
    }

    #[test]
    fn loo_mean_orthonormal() {
        let m = leave_one_out_mean(&eye_anchors(4), 0).unwrap();
        assert!(close(&m, &[0.0, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0], 1e-7));
    }

    #[test]
    fn loo_mean_two_anchors() {
        let a = AnchorSet::new(
            Matrix::from_rows(&[[2.0f32, 0.0, 0.0], [0.0, 3.0, 4.0]]).unwrap(),
            vec!["u".into(), "w".into()],
            "",
            "",
        )
        .unwrap();
        assert!(close(&leave_one_out_mean(&a, 0).unwrap(), &[0.0, 0.6, 0.8], 1e-7));
        assert!(matches!(
            leave_one_out_mean(&a, 2),
            Err(Error::IndexOutOfRange { index: 2, len: 2 })
        ));
    }

    #[test]
    fn utie_on_anchor() {
        let a = eye_anchors(4);
        let f = utie(&unit(4, 0), &a).unwrap();
        assert_eq!(f.predicted_index, Some(0));
        assert!(close(&f.vector, &[1.0, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0], 1e-7));
        assert!((cosine(&f.vector, a.anchor(0)).unwrap() - 3f64.sqrt() / 2.0).abs() < 1e-6);
        for j in 1..4 {
            assert!((cosine(&f.vector, a.anchor(j)).unwrap() - 1.0 / 12f64.sqrt()).abs() < 1e-6);
        }
    }

    #[test]
    fn utie_off_axis() {
        let f = utie(&[0.6, 0.8, 0.0, 0.0], &eye_anchors(4)).unwrap();
        assert_eq!(f.predicted_index, Some(1));
        let third = 1.0 / 3.0;
        assert!(close(&f.vector, &[0.6 + third, 0.8, third, third], 1e-7));
    }

    #[test]
    fn ie_pte_cases() {
        let a = eye_anchors(4);
        let f = ie_pte(&unit(4, 0), &a).unwrap();
        assert_eq!(f.vector, vec![2.0, 0.0, 0.0, 0.0]);
        assert_eq!(cosine(&f.vector, a.anchor(0)).unwrap(), 1.0);

        let f = ie_pte(&[0.6, 0.8, 0.0, 0.0], &a).unwrap();
        assert!(close(&f.vector, &[0.6, 1.8, 0.0, 0.0], 1e-7));
        // 1.8 / sqrt(0.36 + 3.24)
        assert!((cosine(&f.vector, a.anchor(1)).unwrap() - 0.948683).abs() < 1e-6);
    }

    #[test]
    fn raw_fusion_adds_stored_vectors() {
        let a = AnchorSet::new(
            Matrix::from_rows(&[[2.0f32, 0.0], [0.0, 4.0]]).unwrap(),
            vec!["a".into(), "b".into()],
            "",
            "",
        )
        .unwrap();
        let f = fuse(&[3.0, 1.0], Some(&a), TransformMode::Utie, FusionOptions::raw()).unwrap();
        assert_eq!(f.vector, vec![3.0, 5.0]);
        let f = fuse(&[3.0, 1.0], Some(&a), TransformMode::IePte, FusionOptions::raw()).unwrap();
        assert_eq!(f.vector, vec![5.0, 1.0]);
        let f = fuse(&[3.0, 1.0], None, TransformMode::Ie, FusionOptions::raw()).unwrap();
        assert_eq!(f.vector, vec![3.0, 1.0]);
    }

    #[test]
    fn anchors_required() {
        assert!(matches!(
            fuse(&[1.0], None, TransformMode::Utie, FusionOptions::default()),
            Err(Error::AnchorsRequired("utie"))
        ));
    }

    #[test]
    fn transform_reports_offending_sample() {
        let m = Matrix::from_rows(&[[1.0f32, 0.0, 0.0], [0.0, 1.0, 0.0]]).unwrap();
        let recs = vec![
            ManifestRecord { id: "a".into(), row: 0, identity: "a".into(), group: "g0".into() },
            ManifestRecord { id: "b".into(), row: 1, identity: "b".into(), group: "g1".into() },
        ];
        let b = EmbeddingBundle::new(m, recs).unwrap();
        let err = transform_bundle(&b, Some(&eye_anchors(4)), TransformMode::Utie, FusionOptions::default())
            .unwrap_err();
        assert!(matches!(err.root(), Error::DimensionMismatch { .. }));
        assert!(matches!(err, Error::Sample { ref id, .. } if id == "b" || id == "a"));
    }

    #[test]
    fn orthonormal_drop_law() {
        for n in 2..=8 {
            let a = eye_anchors(n);
            for hat in 0..n {
                let f = utie(&unit(n, hat), &a).unwrap();
                let own = cosine(&f.vector, a.anchor(hat)).unwrap();
                assert!((own - ((n - 1) as f64 / n as f64).sqrt()).abs() <= 1e-6);
                assert!(own < 1.0);
                for j in (0..n).filter(|&j| j != hat) {
                    let other = cosine(&f.vector, a.anchor(j)).unwrap();
                    assert!((other - 1.0 / ((n * (n - 1)) as f64).sqrt()).abs() <= 1e-6);
                }
                let star = ie_pte(&unit(n, hat), &a).unwrap();
                assert!((cosine(&star.vector, a.anchor(hat)).unwrap() - 1.0).abs() <= 1e-9);
            }
        }
    }

    fn naive_unit(v: &[f32]) -> Vec<f64> {
        let n = v.iter().map(|&x| f64::from(x).powi(2)).sum::<f64>().sqrt();
        v.iter().map(|&x| f64::from(x) / n).collect()
    }

    proptest! {
        #[test]
        fn utie_matches_naive_construction(
            img in prop::collection::vec(-1.0f32..1.0, 6),
            raw in prop::collection::vec(-1.0f32..1.0, 24),
        ) {
            prop_assume!(img.iter().map(|x| x * x).sum::<f32>() > 1e-3);
            let rows: Vec<&[f32]> = raw.chunks(6).collect();
            prop_assume!(rows.iter().all(|r| r.iter().map(|x| x * x).sum::<f32>() > 1e-3));
            let a = AnchorSet::new(
                Matrix::from_rows(&rows).unwrap(),
                (0..4).map(|i| i.to_string()).collect(),
                "",
                "",
            ).unwrap();
            let f = utie(&img, &a).unwrap();
            let hat = f.predicted_index.unwrap();

            let mut expect = naive_unit(&img);
            for (i, r) in rows.iter().enumerate() {
                if i != hat {
                    for (e, t) in expect.iter_mut().zip(naive_unit(r)) {
                        *e += t / 3.0;
                    }
                }
            }
            prop_assert!(close(&f.vector, &expect, 1e-7));
        }

        #[test]
        fn ie_is_cosine_neutral(
            u in prop::collection::vec(-5.0f32..5.0, 8),
            v in prop::collection::vec(-5.0f32..5.0, 8),
        ) {
            prop_assume!(u.iter().map(|x| x * x).sum::<f32>() > 1e-3);
            prop_assume!(v.iter().map(|x| x * x).sum::<f32>() > 1e-3);
            let opts = FusionOptions::default();
            let fu = fuse(&u, None, TransformMode::Ie, opts).unwrap().vector;
            let fv = fuse(&v, None, TransformMode::Ie, opts).unwrap().vector;
            prop_assert!((cosine(&fu, &fv).unwrap() - cosine(&u, &v).unwrap()).abs() <= 1e-6);
        }
    }
}
