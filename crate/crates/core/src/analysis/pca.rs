use super::eigen::symmetric_eigen;
use crate::dataset::{FeatureVector, FoodId};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PcaError {
    #[error("PCA needs at least 2 vectors, got {0}")]
    TooFewVectors(usize),
    #[error("vectors have inconsistent lengths")]
    RaggedInput,
    #[error("requested {requested} components but at most {max} are available")]
    TooManyComponents { requested: usize, max: usize },
    #[error("requested zero components")]
    ZeroComponents,
    #[error("all vectors are identical; there is no variance to decompose")]
    ZeroVariance,
}

/// Principal axes of a set of row vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaResult {
    /// Row labels, in input order.
    pub food_ids: Vec<FoodId>,
    pub mean: Vec<f64>,
    /// `K` orthonormal vectors of length `V`, by descending variance.
    pub components: Vec<Vec<f64>>,
    pub explained_variance: Vec<f64>,
    /// One `K`-vector per row.
    pub projections: Vec<Vec<f64>>,
}

impl PcaResult {
    /// Map projections back to the centered input space.
    pub fn reconstruct_centered(&self) -> Vec<Vec<f64>> {
        let v = self.mean.len();
        self.projections
            .iter()
            .map(|p| {
                let mut row = vec![0.0; v];
                for (coef, comp) in p.iter().zip(&self.components) {
                    for (r, c) in row.iter_mut().zip(comp) {
                        *r += coef * c;
                    }
                }
                row
            })
            .collect()
    }
}

pub fn pca(vectors: &[FeatureVector], k: usize) -> Result<PcaResult, PcaError> {
    let rows: Vec<Vec<f64>> = vectors.iter().map(FeatureVector::to_f64).collect();
    let mut out = pca_rows(&rows, k)?;
    out.food_ids = vectors.iter().map(|v| v.food_id).collect();
    Ok(out)
}

/// PCA on unlabeled real-valued rows; `food_ids` is filled with row indices.
pub fn pca_rows(rows: &[Vec<f64>], k: usize) -> Result<PcaResult, PcaError> {
    let n = rows.len();
    if n < 2 {
        return Err(PcaError::TooFewVectors(n));
    }
    let v = rows[0].len();
    if rows.iter().any(|r| r.len() != v) {
        return Err(PcaError::RaggedInput);
    }
    if k == 0 {
        return Err(PcaError::ZeroComponents);
    }
    let max = v.min(n - 1);
    if k > max {
        return Err(PcaError::TooManyComponents { requested: k, max });
    }

    let mut mean = vec![0.0; v];
    for r in rows {
        for (m, x) in mean.iter_mut().zip(r) {
            *m += x;
        }
    }
    for m in &mut mean {
        *m /= n as f64;
    }
    let centered: Vec<Vec<f64>> = rows.iter().map(|r| r.iter().zip(&mean).map(|(x, m)| x - m).collect()).collect();
    let denom = (n - 1) as f64;

    let (values, mut components) = if n <= v {
        // Gram trick: eigenvectors u of X X^T map to X^T u.
        let gram: Vec<Vec<f64>> =
            (0..n).map(|i| (0..n).map(|j| dot(&centered[i], &centered[j]) / denom).collect()).collect();
        let eig = symmetric_eigen(&gram);
        let comps = eig.vectors[..k]
            .iter()
            .map(|u| {
                let mut c = vec![0.0; v];
                for (ui, row) in u.iter().zip(&centered) {
                    for (cj, x) in c.iter_mut().zip(row) {
                        *cj += ui * x;
                    }
                }
                c
            })
            .collect::<Vec<_>>();
        (eig.values, comps)
    } else {
        let mut cov = vec![vec![0.0; v]; v];
        for row in &centered {
            for a in 0..v {
                if row[a] == 0.0 {
                    continue;
                }
                for b in 0..v {
                    cov[a][b] += row[a] * row[b];
                }
            }
        }
        for r in &mut cov {
            for x in r.iter_mut() {
                *x /= denom;
            }
        }
        let eig = symmetric_eigen(&cov);
        (eig.values.clone(), eig.vectors[..k].to_vec())
    };

    let top = values.first().copied().unwrap_or(0.0);
    let scale = centered.iter().flatten().fold(0.0f64, |a, x| a.max(x.abs()));
    if scale == 0.0 || top <= f64::EPSILON * scale * scale * n as f64 {
        return Err(PcaError::ZeroVariance);
    }
    let tol = top * 1e-12 * (n.max(v) as f64);
    let mut explained: Vec<f64> = values[..k].iter().map(|&x| if x <= tol { 0.0 } else { x }).collect();

    // Orthonormalize; directions with no variance are completed from the
    // standard basis.
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(k);
    for (i, c) in components.iter_mut().enumerate() {
        if explained[i] > 0.0 {
            gram_schmidt(c, &basis);
            let norm = dot(c, c).sqrt();
            if norm > 1e-12 {
                c.iter_mut().for_each(|x| *x /= norm);
                basis.push(c.clone());
                continue;
            }
            explained[i] = 0.0;
        }
        *c = complete_basis(&basis, v);
        basis.push(c.clone());
    }
    for c in &mut components {
        fix_sign(c);
    }

    let projections = centered.iter().map(|r| components.iter().map(|c| dot(r, c)).collect()).collect();
    Ok(PcaResult { food_ids: (0..n as u64).collect(), mean, components, explained_variance: explained, projections })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn gram_schmidt(c: &mut [f64], basis: &[Vec<f64>]) {
    for _ in 0..2 {
        for b in basis {
            let p = dot(c, b);
            for (x, y) in c.iter_mut().zip(b) {
                *x -= p * y;
            }
        }
    }
}

fn complete_basis(basis: &[Vec<f64>], v: usize) -> Vec<f64> {
    let mut best = (0.0, vec![0.0; v]);
    for j in 0..v {
        let mut e = vec![0.0; v];
        e[j] = 1.0;
        gram_schmidt(&mut e, basis);
        let norm = dot(&e, &e).sqrt();
        if norm > best.0 + 1e-9 {
            best = (norm, e);
        }
    }
    let (norm, mut e) = best;
    e.iter_mut().for_each(|x| *x /= norm);
    e
}

/// Flip so the largest-magnitude coordinate is positive; the first such
/// coordinate wins ties.
fn fix_sign(c: &mut [f64]) {
    let mut idx = 0;
    for (i, x) in c.iter().enumerate() {
        if x.abs() > c[idx].abs() + 1e-12 {
            idx = i;
        }
    }
    if c[idx] < 0.0 {
        c.iter_mut().for_each(|x| *x = -*x);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_axis_data() {
        let rows: Vec<Vec<f64>> = (0..5).map(|i| vec![0.0, i as f64, 0.0]).collect();
        let r = pca_rows(&rows, 2).unwrap();
        assert!((r.components[0][1] - 1.0).abs() < 1e-12);
        assert!(r.explained_variance[0] > 0.0);
        assert_eq!(r.explained_variance[1], 0.0);
        assert!(dot(&r.components[0], &r.components[1]).abs() < 1e-12);
        assert!((dot(&r.components[1], &r.components[1]) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn errors() {
        assert_eq!(pca_rows(&[vec![1.0]], 1), Err(PcaError::TooFewVectors(1)));
        assert_eq!(pca_rows(&[vec![1.0], vec![2.0, 3.0]], 1), Err(PcaError::RaggedInput));
        assert_eq!(
            pca_rows(&[vec![1.0, 2.0], vec![2.0, 3.0]], 2),
            Err(PcaError::TooManyComponents { requested: 2, max: 1 })
        );
        assert_eq!(pca_rows(&[vec![1.0, 2.0], vec![1.0, 2.0]], 1), Err(PcaError::ZeroVariance));
    }

    #[test]
    fn both_paths_agree() {
        // 4 rows x 3 columns uses the covariance path; the transpose-shaped
        // problem with padded columns uses the Gram path.
        let rows = vec![vec![1.0, 0.0, 2.0], vec![0.0, 1.0, 1.0], vec![3.0, 1.0, 0.0], vec![1.0, 2.0, 2.0]];
        let a = pca_rows(&rows, 2).unwrap();
        let padded: Vec<Vec<f64>> = rows.iter().map(|r| [r.as_slice(), &[0.0, 0.0]].concat()).collect();
        let b = pca_rows(&padded, 2).unwrap();
        for k in 0..2 {
            assert!((a.explained_variance[k] - b.explained_variance[k]).abs() < 1e-10);
            for j in 0..3 {
                assert!((a.components[k][j] - b.components[k][j]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn feature_vectors_keep_ids() {
        let fv = |id, bits: &[bool]| FeatureVector { food_id: id, bits: bits.to_vec() };
        let r = pca(&[fv(4, &[true, false]), fv(9, &[false, true]), fv(2, &[true, true])], 1).unwrap();
        assert_eq!(r.food_ids, [4, 9, 2]);
        assert_eq!(r.projections.len(), 3);
    }
}
