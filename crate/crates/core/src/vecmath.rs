//! Elementary vector operations.
//!
//! All reductions accumulate in `f64`, walking components in index order, so
//! the same input always yields the same bits regardless of caller threading.

use crate::error::{Error, Result};

/// Norms below this are treated as zero vectors.
pub const MIN_NORM: f64 = 1e-12;

fn check_finite(v: &[f32]) -> Result<()> {
    match v.iter().position(|x| !x.is_finite()) {
        Some(i) => Err(Error::NonFiniteInput(i)),
        None => Ok(()),
    }
}

fn check_dims(left: usize, right: usize) -> Result<()> {
    if left != right {
        return Err(Error::DimensionMismatch { left, right });
    }
    Ok(())
}

/// Euclidean norm.
pub fn l2_norm(v: &[f32]) -> Result<f64> {
    check_finite(v)?;
    Ok(sum_squares(v).sqrt())
}

fn sum_squares(v: &[f32]) -> f64 {
    v.iter().map(|&x| f64::from(x) * f64::from(x)).sum()
}

fn dot(u: &[f32], v: &[f32]) -> f64 {
    u.iter()
        .zip(v)
        .map(|(&a, &b)| f64::from(a) * f64::from(b))
        .sum()
}

/// Unit-normalized copy of `v`, kept in `f64`.
pub fn normalize_f64(v: &[f32]) -> Result<Vec<f64>> {
    let norm = l2_norm(v)?;
    if norm < MIN_NORM {
        return Err(Error::ZeroNormEmbedding { norm });
    }
    Ok(v.iter().map(|&x| f64::from(x) / norm).collect())
}

/// Unit-normalized copy of `v`.
pub fn normalize(v: &[f32]) -> Result<Vec<f32>> {
    Ok(normalize_f64(v)?.into_iter().map(|x| x as f32).collect())
}

/// Cosine similarity clamped to `[-1, 1]`.
///
/// Symmetric bit-for-bit: the dot product visits components in index order
/// and the norm product is commutative.
pub fn cosine(u: &[f32], v: &[f32]) -> Result<f64> {
    check_dims(u.len(), v.len())?;
    check_finite(u)?;
    check_finite(v)?;
    let nu = sum_squares(u).sqrt();
    let nv = sum_squares(v).sqrt();
    if nu < MIN_NORM {
        return Err(Error::ZeroNormEmbedding { norm: nu });
    }
    if nv < MIN_NORM {
        return Err(Error::ZeroNormEmbedding { norm: nv });
    }
    Ok((dot(u, v) / (nu * nv)).clamp(-1.0, 1.0))
}

/// Componentwise mean of `rows`, accumulated in list order.
pub fn mean_rows<R: AsRef<[f32]>>(rows: &[R]) -> Result<Vec<f32>> {
    let first = rows.first().ok_or(Error::EmptySet)?.as_ref();
    let dim = first.len();
    let mut acc = vec![0.0f64; dim];
    for row in rows {
        let row = row.as_ref();
        check_dims(dim, row.len())?;
        check_finite(row)?;
        for (a, &x) in acc.iter_mut().zip(row) {
            *a += f64::from(x);
        }
    }
    let n = rows.len() as f64;
    Ok(acc.into_iter().map(|a| (a / n) as f32).collect())
}
