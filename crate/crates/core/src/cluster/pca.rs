//! Principal component analysis via a cyclic Jacobi eigensolver on the
//! covariance matrix.

use crate::embed::EmbeddingMatrix;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct PcaModel {
    pub mean: Vec<f64>,
    /// Row-major `n_components x dim`, orthonormal rows.
    pub components: Vec<f64>,
    /// Variance along each component, non-increasing.
    pub explained_variance: Vec<f64>,
    pub dim: usize,
}

impl PcaModel {
    /// Fits on the given rows of `data` (all rows when `fit_rows` is `None`).
    pub fn fit(data: &[f64], dim: usize, n_components: usize, fit_rows: Option<&[usize]>) -> Result<Self> {
        if dim == 0 || !data.len().is_multiple_of(dim) {
            return Err(Error::invalid("PCA input is not a whole number of rows"));
        }
        let all: Vec<usize>;
        let rows = match fit_rows {
            Some(r) => r,
            None => {
                all = (0..data.len() / dim).collect();
                &all
            }
        };
        let n = rows.len();
        if n_components == 0 || n_components > n.min(dim) {
            return Err(Error::invalid(format!(
                "target dim {n_components} must be in 1..={} for {n} rows of dim {dim}",
                n.min(dim)
            )));
        }
        let row = |i: usize| &data[i * dim..(i + 1) * dim];

        let mut mean = vec![0.0; dim];
        for &i in rows {
            for (m, x) in mean.iter_mut().zip(row(i)) {
                *m += x;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n as f64);

        // Upper triangle of the scatter matrix, mirrored afterwards.
        let mut cov = vec![0.0; dim * dim];
        let mut centered = vec![0.0; dim];
        for &i in rows {
            for ((c, x), m) in centered.iter_mut().zip(row(i)).zip(&mean) {
                *c = x - m;
            }
            for a in 0..dim {
                let ca = centered[a];
                if ca == 0.0 {
                    continue;
                }
                let dst = &mut cov[a * dim + a..(a + 1) * dim];
                for (d, cb) in dst.iter_mut().zip(&centered[a..]) {
                    *d += ca * cb;
                }
            }
        }
        let denom = if n > 1 { (n - 1) as f64 } else { 1.0 };
        for a in 0..dim {
            for b in a..dim {
                let v = cov[a * dim + b] / denom;
                cov[a * dim + b] = v;
                cov[b * dim + a] = v;
            }
        }

        let (values, vectors) = jacobi_eigen(&mut cov, dim);
        let mut order: Vec<usize> = (0..dim).collect();
        order.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));

        let mut components = Vec::with_capacity(n_components * dim);
        let mut explained_variance = Vec::with_capacity(n_components);
        for &c in order.iter().take(n_components) {
            let mut v: Vec<f64> = (0..dim).map(|r| vectors[r * dim + c]).collect();
            let lead = v
                .iter()
                .enumerate()
                .fold((0, 0.0f64), |acc, (i, x)| if x.abs() > acc.1.abs() { (i, *x) } else { acc });
            if lead.1 < 0.0 {
                v.iter_mut().for_each(|x| *x = -*x);
            }
            components.extend(v);
            explained_variance.push(values[c].max(0.0));
        }
        Ok(PcaModel {
            mean,
            components,
            explained_variance,
            dim,
        })
    }

    pub fn n_components(&self) -> usize {
        self.explained_variance.len()
    }

    /// Projects rows onto the first `k` components.
    pub fn transform(&self, data: &[f64], k: usize) -> Vec<f64> {
        let k = k.min(self.n_components());
        let mut out = Vec::with_capacity(data.len() / self.dim * k);
        let mut centered = vec![0.0; self.dim];
        for x in data.chunks_exact(self.dim) {
            for ((c, v), m) in centered.iter_mut().zip(x).zip(&self.mean) {
                *c = v - m;
            }
            for comp in self.components.chunks_exact(self.dim).take(k) {
                out.push(comp.iter().zip(&centered).map(|(a, b)| a * b).sum());
            }
        }
        out
    }

    /// Maps scores back into the original space.
    pub fn inverse_transform(&self, scores: &[f64], k: usize) -> Vec<f64> {
        let mut out = Vec::with_capacity(scores.len() / k * self.dim);
        for s in scores.chunks_exact(k) {
            let mut x = self.mean.clone();
            for (coef, comp) in s.iter().zip(self.components.chunks_exact(self.dim)) {
                for (xi, ci) in x.iter_mut().zip(comp) {
                    *xi += coef * ci;
                }
            }
            out.extend(x);
        }
        out
    }
}

/// Mean-centered projection onto the top `target_dim` principal components.
pub fn pca_reduce(matrix: &EmbeddingMatrix, target_dim: usize) -> Result<EmbeddingMatrix> {
    let model = PcaModel::fit(matrix.as_slice(), matrix.dim(), target_dim, None)?;
    let data = model.transform(matrix.as_slice(), target_dim);
    EmbeddingMatrix::new(
        matrix.part_ids().to_vec(),
        data,
        target_dim,
        format!("{}|pca:{target_dim}", matrix.backend_id()),
    )
}

/// Eigen-decomposition of a symmetric matrix. Destroys `a`; returns the
/// eigenvalues and the column-major-in-rows eigenvector matrix `v` where
/// column `c` (entries `v[r * n + c]`) pairs with value `c`.
fn jacobi_eigen(a: &mut [f64], n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let scale: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    if scale == 0.0 {
        return (vec![0.0; n], v);
    }
    let tol = scale * 1e-15;
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|p| (p + 1..n).map(move |q| (p, q)))
            .map(|(p, q)| a[p * n + q] * a[p * n + q])
            .sum::<f64>()
            .sqrt();
        if off <= tol {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq.abs() <= tol * 1e-3 {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    ((0..n).map(|i| a[i * n + i]).collect(), v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn diagonal_covariance() {
        // Variance 4 along x, 1 along y.
        let data = [2.0, 1.0, -2.0, -1.0, 2.0, -1.0, -2.0, 1.0];
        let m = PcaModel::fit(&data, 2, 2, None).unwrap();
        assert_abs_diff_eq!(m.explained_variance[0], 16.0 / 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(m.explained_variance[1], 4.0 / 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(m.components[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(m.components[3], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn sign_convention() {
        let data = [1.0, -3.0, -1.0, 3.0, 0.5, -1.5, -0.5, 1.5];
        let m = PcaModel::fit(&data, 2, 1, None).unwrap();
        let comp = &m.components[..2];
        let lead = if comp[0].abs() >= comp[1].abs() { comp[0] } else { comp[1] };
        assert!(lead > 0.0);
    }

    #[test]
    fn invalid_target_dim() {
        let data = [0.0, 1.0, 2.0, 3.0];
        assert!(PcaModel::fit(&data, 2, 0, None).is_err());
        assert!(PcaModel::fit(&data, 2, 3, None).is_err());
        assert!(PcaModel::fit(&data[..2], 2, 2, None).is_err());
    }
}
