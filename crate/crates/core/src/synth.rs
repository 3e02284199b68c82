//! Deterministic synthetic embedding populations.
//!
//! Every draw comes from one SplitMix64 stream seeded with `config.seed`:
//!
//! ```text
//! state <- state + 0x9E3779B97F4A7C15
//! z <- (state ^ (state >> 30)) * 0xBF58476D1CE4E5B9
//! z <- (z ^ (z >> 27)) * 0x94D049BB133111EB
//! out <- z ^ (z >> 31)
//! ```
//!
//! Uniforms are `((out >> 11) + 0.5) / 2^53`, strictly inside (0, 1).
//! Gaussians use Box-Muller on two consecutive uniforms `u1, u2`, returning
//! `r cos(2 pi u2)` first and `r sin(2 pi u2)` on the next call, with
//! `r = sqrt(-2 ln u1)`. Bounded integers are `out % n`.
//!
//! Draw order:
//! 1. group directions, group by group: `dim` gaussians, Gram-Schmidt against
//!    the earlier directions (two passes), normalize; redraw if the residual
//!    norm falls below 1e-6;
//! 2. identity directions, group-major then identity: `dim` gaussians with all
//!    group directions projected out (two passes), normalize, same redraw rule;
//! 3. samples, group-major, identity, image: `dim` gaussians of noise;
//!    `group_strength * group + identity_strength * identity + sigma * noise`,
//!    unit-normalized;
//! 4. impostor pairs, group by group: two bounded draws over the group's
//!    samples per attempt, rejected when both share an identity.
//!
//! Genuine pairs need no randomness: every within-identity pair, identity
//! order then image order. Each group's pair list is genuine pairs followed by
//! the same number of impostor pairs, with folds assigned round-robin over 10.

use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::store::{AnchorSet, EmbeddingBundle, ManifestRecord, Pair, PairLabel, PairSet};
use crate::zero_shot::DEFAULT_TEMPLATE;

pub const PAIR_FOLDS: usize = 10;
pub const MODEL_ID: &str = "synthetic";

/// SplitMix64 with Box-Muller gaussians.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
    spare: Option<f64>,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed, spare: None }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform in the open interval (0, 1).
    pub fn uniform(&mut self) -> f64 {
        ((self.next_u64() >> 11) as f64 + 0.5) / (1u64 << 53) as f64
    }

    pub fn gaussian(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        let u1 = self.uniform();
        let u2 = self.uniform();
        let r = (-2.0 * u1.ln()).sqrt();
        let theta = 2.0 * std::f64::consts::PI * u2;
        self.spare = Some(r * theta.sin());
        r * theta.cos()
    }

    pub fn below(&mut self, n: usize) -> usize {
        (self.next_u64() % n as u64) as usize
    }

    fn gaussian_vec(&mut self, dim: usize) -> Vec<f64> {
        (0..dim).map(|_| self.gaussian()).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub n_groups: usize,
    pub ids_per_group: usize,
    pub images_per_id: usize,
    pub dim: usize,
    pub seed: u64,
    pub group_strength: f64,
    pub identity_strength: f64,
    pub noise_sigma: f64,
    /// Optional per-group multiplier on `noise_sigma`; empty means 1 for all.
    pub noise_scales: Vec<f64>,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_groups: 4,
            ids_per_group: 20,
            images_per_id: 5,
            dim: 64,
            seed: 7,
            group_strength: 0.6,
            identity_strength: 0.7,
            noise_sigma: 0.1,
            noise_scales: Vec::new(),
        }
    }
}

impl SynthConfig {
    pub fn with_seed(seed: u64) -> Self {
        SynthConfig { seed, ..Default::default() }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::ConfigInvalid(msg));
        if self.n_groups < 2 {
            return bad(format!("need at least 2 groups, got {}", self.n_groups));
        }
        if self.ids_per_group == 0 || self.images_per_id == 0 {
            return bad("identity and image counts must be at least 1".into());
        }
        if self.dim < self.n_groups {
            return bad(format!("dim {} is smaller than the group count {}", self.dim, self.n_groups));
        }
        if self.identity_strength > 0.0 && self.dim == self.n_groups {
            return bad("identity directions need dim > n_groups".into());
        }
        for (name, s) in [("group_strength", self.group_strength), ("identity_strength", self.identity_strength)] {
            if !(0.0..=1.0).contains(&s) {
                return bad(format!("{name} {s} is outside [0, 1]"));
            }
        }
        if self.group_strength.powi(2) + self.identity_strength.powi(2) > 1.0 + 1e-12 {
            return bad("group_strength^2 + identity_strength^2 exceeds 1".into());
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return bad(format!("noise_sigma {} must be finite and >= 0", self.noise_sigma));
        }
        if !self.noise_scales.is_empty() && self.noise_scales.len() != self.n_groups {
            return bad(format!(
                "{} noise scales for {} groups",
                self.noise_scales.len(),
                self.n_groups
            ));
        }
        if self.noise_scales.iter().any(|s| !(*s >= 0.0 && s.is_finite())) {
            return bad("noise scales must be finite and >= 0".into());
        }
        if self.group_strength == 0.0 && self.identity_strength == 0.0 && self.noise_sigma == 0.0 {
            return bad("all strengths are zero, samples would be zero vectors".into());
        }
        Ok(())
    }

    fn noise_for(&self, group: usize) -> f64 {
        self.noise_sigma * self.noise_scales.get(group).copied().unwrap_or(1.0)
    }
}

pub fn group_label(g: usize) -> String {
    format!("group{g}")
}

#[derive(Debug, Clone)]
pub struct SynthData {
    pub bundle: EmbeddingBundle,
    pub anchors: AnchorSet,
    pub pairs: BTreeMap<String, PairSet>,
}

impl SynthData {
    /// Writes `bundle/`, `anchors/` and one `pairs_<group>.csv` per group.
    pub fn write(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        self.bundle.write(dir.join("bundle"))?;
        self.anchors.write(dir.join("anchors"))?;
        for (group, pairs) in &self.pairs {
            pairs.write_csv(dir.join(format!("pairs_{group}.csv")))?;
        }
        Ok(())
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Draws a unit vector orthogonal to every vector in `basis`.
fn orthogonal_unit(rng: &mut SplitMix64, dim: usize, basis: &[Vec<f64>]) -> Vec<f64> {
    loop {
        let mut v = rng.gaussian_vec(dim);
        for _ in 0..2 {
            for b in basis {
                let p = dot(&v, b);
                v.iter_mut().zip(b).for_each(|(x, y)| *x -= p * y);
            }
        }
        let norm = dot(&v, &v).sqrt();
        if norm > 1e-6 {
            v.iter_mut().for_each(|x| *x /= norm);
            return v;
        }
    }
}

pub fn generate(config: &SynthConfig) -> Result<SynthData> {
    config.validate()?;
    let SynthConfig {
        n_groups,
        ids_per_group,
        images_per_id,
        dim,
        ..
    } = *config;
    let mut rng = SplitMix64::new(config.seed);

    let mut group_dirs: Vec<Vec<f64>> = Vec::with_capacity(n_groups);
    for _ in 0..n_groups {
        let d = orthogonal_unit(&mut rng, dim, &group_dirs);
        group_dirs.push(d);
    }

    let mut identity_dirs = Vec::with_capacity(n_groups * ids_per_group);
    for _ in 0..n_groups * ids_per_group {
        identity_dirs.push(if config.identity_strength > 0.0 {
            orthogonal_unit(&mut rng, dim, &group_dirs)
        } else {
            vec![0.0; dim]
        });
    }

    let total = n_groups * ids_per_group * images_per_id;
    let mut data = Vec::with_capacity(total * dim);
    let mut records = Vec::with_capacity(total);
    for (g, group_dir) in group_dirs.iter().enumerate() {
        let sigma = config.noise_for(g);
        for k in 0..ids_per_group {
            let id_dir = &identity_dirs[g * ids_per_group + k];
            for j in 0..images_per_id {
                let noise = rng.gaussian_vec(dim);
                let v: Vec<f64> = (0..dim)
                    .map(|c| {
                        config.group_strength * group_dir[c]
                            + config.identity_strength * id_dir[c]
                            + sigma * noise[c]
                    })
                    .collect();
                let norm = dot(&v, &v).sqrt();
                if norm < 1e-12 {
                    return Err(Error::ConfigInvalid("generated a zero-norm sample".into()));
                }
                data.extend(v.iter().map(|x| (x / norm) as f32));
                records.push(ManifestRecord {
                    id: format!("g{g}-id{k}-img{j}"),
                    row: records.len(),
                    identity: format!("g{g}-id{k}"),
                    group: group_label(g),
                });
            }
        }
    }

    let per_group = ids_per_group * images_per_id;
    let mut pairs = BTreeMap::new();
    for g in 0..n_groups {
        let base = g * per_group;
        let sample = |k: usize, j: usize| &records[base + k * images_per_id + j];
        let mut list = Vec::new();
        for k in 0..ids_per_group {
            for j1 in 0..images_per_id {
                for j2 in j1 + 1..images_per_id {
                    list.push((sample(k, j1).id.clone(), sample(k, j2).id.clone(), PairLabel::Genuine));
                }
            }
        }
        if ids_per_group >= 2 {
            let genuine = list.len();
            while list.len() < 2 * genuine {
                let a = rng.below(per_group);
                let b = rng.below(per_group);
                if a / images_per_id == b / images_per_id {
                    continue;
                }
                list.push((records[base + a].id.clone(), records[base + b].id.clone(), PairLabel::Impostor));
            }
        }
        let set = list
            .into_iter()
            .enumerate()
            .map(|(i, (a, b, label))| Pair::new(a, b, label, Some(i % PAIR_FOLDS)))
            .collect();
        pairs.insert(group_label(g), PairSet::new(set)?);
    }

    let bundle = EmbeddingBundle::new(Matrix::new(total, dim, data)?, records)?;
    let anchor_rows: Vec<Vec<f32>> = group_dirs
        .iter()
        .map(|d| d.iter().map(|&x| x as f32).collect())
        .collect();
    let anchors = AnchorSet::new(
        Matrix::from_rows(&anchor_rows)?,
        (0..n_groups).map(group_label).collect(),
        DEFAULT_TEMPLATE,
        MODEL_ID,
    )?;
    Ok(SynthData { bundle, anchors, pairs })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn splitmix_reference_values() {
        // published SplitMix64 outputs for seed 0
        let mut r = SplitMix64::new(0);
        assert_eq!(r.next_u64(), 0xE220_A839_7B1D_CDAF);
        assert_eq!(r.next_u64(), 0x6E78_9E6A_A1B9_65F4);
        assert_eq!(r.next_u64(), 0x06C4_5D18_8009_454F);
    }

    #[test]
    fn uniforms_stay_open() {
        let mut r = SplitMix64::new(3);
        for _ in 0..10_000 {
            let u = r.uniform();
            assert!(u > 0.0 && u < 1.0);
        }
    }

    #[test]
    fn gaussian_moments() {
        let mut r = SplitMix64::new(11);
        let xs: Vec<f64> = (0..200_000).map(|_| r.gaussian()).collect();
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / xs.len() as f64;
        assert!(mean.abs() < 0.01);
        assert!((var - 1.0).abs() < 0.02);
    }

    #[test]
    fn config_validation() {
        let ok = SynthConfig::default();
        assert!(ok.validate().is_ok());
        for bad in [
            SynthConfig { n_groups: 1, ..ok.clone() },
            SynthConfig { dim: 3, ..ok.clone() },
            SynthConfig { dim: 4, ..ok.clone() },
            SynthConfig { group_strength: 0.9, identity_strength: 0.9, ..ok.clone() },
            SynthConfig { noise_sigma: -0.1, ..ok.clone() },
            SynthConfig { noise_scales: vec![1.0, 2.0], ..ok.clone() },
            SynthConfig { ids_per_group: 0, ..ok.clone() },
        ] {
            assert!(matches!(generate(&bad), Err(Error::ConfigInvalid(_))), "{bad:?}");
        }
    }

    #[test]
    fn noiseless_samples_sit_on_anchors() {
        let cfg = SynthConfig {
            group_strength: 1.0,
            identity_strength: 0.0,
            noise_sigma: 0.0,
            ids_per_group: 3,
            images_per_id: 2,
            dim: 8,
            ..Default::default()
        };
        let d = generate(&cfg).unwrap();
        for rec in d.bundle.records() {
            let g = d.anchors.index_of(&rec.group).unwrap();
            assert_eq!(d.bundle.embedding(rec), d.anchors.anchor(g));
        }
        let zs = crate::zero_shot::zero_shot_accuracy(&d.bundle, &d.anchors).unwrap();
        assert_eq!(zs.mean_accuracy, 100.0);
    }

    #[test]
    fn deterministic_and_structured() {
        let cfg = SynthConfig::default();
        let a = generate(&cfg).unwrap();
        let b = generate(&cfg).unwrap();
        let bits = |d: &SynthData| -> Vec<u32> { d.bundle.embeddings().as_slice().iter().map(|x| x.to_bits()).collect() };
        assert_eq!(bits(&a), bits(&b));
        assert_eq!(a.pairs, b.pairs);
        assert_eq!(a.bundle.len(), 400);

        for i in 0..4 {
            for j in 0..4 {
                let d: f64 = a.anchors.anchor(i).iter().zip(a.anchors.anchor(j)).map(|(x, y)| f64::from(*x) * f64::from(*y)).sum();
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((d - want).abs() < 1e-6);
            }
        }

        for (group, set) in &a.pairs {
            let genuine = set.pairs().iter().filter(|p| p.label.is_genuine()).count();
            assert_eq!(genuine, 20 * 10);
            assert_eq!(set.len(), 2 * genuine);
            for p in set.pairs() {
                let (ra, rb) = (a.bundle.record(&p.id_a).unwrap(), a.bundle.record(&p.id_b).unwrap());
                assert_eq!(&ra.group, group);
                assert_eq!(&rb.group, group);
                assert_eq!(ra.identity == rb.identity, p.label.is_genuine());
            }
            assert_eq!(set.fold_count(), Some(PAIR_FOLDS));
        }
    }

    #[test]
    fn seeds_differ() {
        let a = generate(&SynthConfig::with_seed(1)).unwrap();
        let b = generate(&SynthConfig::with_seed(2)).unwrap();
        assert_ne!(a.bundle.embeddings(), b.bundle.embeddings());
    }
}
