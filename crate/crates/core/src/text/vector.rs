use crate::error::{Error, Result};

/// Cosine similarity; errors on a zero-norm input or mismatched lengths.
pub fn cosine(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::InvalidArgument(format!(
            "vector length mismatch: {} vs {}",
            u.len(),
            v.len()
        )));
    }
    let (mut dot, mut nu, mut nv) = (0.0, 0.0, 0.0);
    for (a, b) in u.iter().zip(v) {
        dot += a * b;
        nu += a * a;
        nv += b * b;
    }
    if nu == 0.0 || nv == 0.0 {
        return Err(Error::Degenerate("cosine of a zero-norm vector".into()));
    }
    Ok((dot / (nu.sqrt() * nv.sqrt())).clamp(-1.0, 1.0))
}

/// Arithmetic mean of equal-length vectors.
pub fn mean_vector<V: AsRef<[f64]>>(vectors: &[V]) -> Result<Vec<f64>> {
    let first = vectors
        .first()
        .ok_or_else(|| Error::EmptyInput("mean of an empty vector set".into()))?;
    let dim = first.as_ref().len();
    let mut mean = vec![0.0; dim];
    for v in vectors {
        let v = v.as_ref();
        if v.len() != dim {
            return Err(Error::InvalidArgument(format!(
                "vector length mismatch: {} vs {dim}",
                v.len()
            )));
        }
        for (m, x) in mean.iter_mut().zip(v) {
            *m += x;
        }
    }
    let n = vectors.len() as f64;
    mean.iter_mut().for_each(|m| *m /= n);
    Ok(mean)
}
