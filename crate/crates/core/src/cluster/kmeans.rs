//! Lloyd's k-means with k-means++ seeding.

use rand::Rng;

use crate::error::{Error, Result};
use crate::seed;

pub const DEFAULT_MAX_ITER: usize = 300;

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansFit {
    /// Cluster index per point.
    pub labels: Vec<usize>,
    /// Row-major `k x dim`; each row is the mean of its assigned points.
    pub centroids: Vec<f64>,
    /// Sum of squared distances after each assignment step.
    pub objective_history: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

impl KMeansFit {
    pub fn objective(&self) -> f64 {
        *self.objective_history.last().unwrap_or(&0.0)
    }
}

#[inline]
fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Fits k-means on `n = data.len() / dim` row-major points.
pub fn fit(data: &[f64], dim: usize, k: usize, seed: u64, max_iter: usize) -> Result<KMeansFit> {
    if dim == 0 || !data.len().is_multiple_of(dim) {
        return Err(Error::invalid("k-means input is not a whole number of rows"));
    }
    let n = data.len() / dim;
    if k == 0 {
        return Err(Error::invalid("k must be at least 1"));
    }
    if k > n {
        return Err(Error::invalid(format!("k = {k} exceeds the number of points ({n})")));
    }
    let row = |i: usize| &data[i * dim..(i + 1) * dim];

    let mut centroids = plus_plus_init(data, dim, k, seed);
    let mut labels = vec![0usize; n];
    let mut history = Vec::new();
    history.push(assign(data, dim, &centroids, &mut labels));

    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iter {
        iterations += 1;
        update_centroids(data, dim, k, &mut labels, &mut centroids);
        let mut next = labels.clone();
        history.push(assign(data, dim, &centroids, &mut next));
        if next == labels {
            converged = true;
            break;
        }
        labels = next;
    }
    // Leave centroids consistent with the final assignment.
    update_centroids(data, dim, k, &mut labels, &mut centroids);
    if !converged {
        let obj = (0..n).map(|i| sq_dist(row(i), &centroids[labels[i] * dim..(labels[i] + 1) * dim])).sum();
        history.push(obj);
    }
    Ok(KMeansFit {
        labels,
        centroids,
        objective_history: history,
        iterations,
        converged,
    })
}

fn plus_plus_init(data: &[f64], dim: usize, k: usize, seed: u64) -> Vec<f64> {
    let n = data.len() / dim;
    let row = |i: usize| &data[i * dim..(i + 1) * dim];
    let mut rng = seed::rng(seed);
    let mut chosen = Vec::with_capacity(k);
    let mut taken = vec![false; n];
    let first = rng.random_range(0..n);
    chosen.push(first);
    taken[first] = true;
    let mut d2: Vec<f64> = (0..n).map(|i| sq_dist(row(i), row(first))).collect();
    while chosen.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut pick = None;
            for (i, &w) in d2.iter().enumerate() {
                if w <= 0.0 {
                    continue;
                }
                pick = Some(i);
                if target < w {
                    break;
                }
                target -= w;
            }
            pick.expect("positive total weight has a positive entry")
        } else {
            // Every remaining point coincides with a chosen center.
            (0..n).find(|&i| !taken[i]).expect("k <= n")
        };
        taken[next] = true;
        chosen.push(next);
        for (i, d) in d2.iter_mut().enumerate() {
            *d = d.min(sq_dist(row(i), row(next)));
        }
    }
    let mut centroids = Vec::with_capacity(k * dim);
    for c in chosen {
        centroids.extend_from_slice(row(c));
    }
    centroids
}

/// Nearest-centroid assignment (ties go to the lower index); returns the
/// objective.
fn assign(data: &[f64], dim: usize, centroids: &[f64], labels: &mut [usize]) -> f64 {
    let mut total = 0.0;
    for (i, x) in data.chunks_exact(dim).enumerate() {
        let mut best = f64::INFINITY;
        let mut arg = 0;
        for (j, c) in centroids.chunks_exact(dim).enumerate() {
            let d = sq_dist(x, c);
            if d < best {
                best = d;
                arg = j;
            }
        }
        labels[i] = arg;
        total += best;
    }
    total
}

/// Sets each centroid to the mean of its points. An empty cluster takes over
/// the point farthest from its current centroid (among clusters with more
/// than one member).
fn update_centroids(data: &[f64], dim: usize, k: usize, labels: &mut [usize], centroids: &mut [f64]) {
    let n = labels.len();
    let row = |i: usize| &data[i * dim..(i + 1) * dim];
    let mut counts = vec![0usize; k];
    for &l in labels.iter() {
        counts[l] += 1;
    }
    for j in 0..k {
        if counts[j] > 0 {
            continue;
        }
        let mut far = None;
        let mut far_d = -1.0;
        for i in 0..n {
            let l = labels[i];
            if counts[l] <= 1 {
                continue;
            }
            let d = sq_dist(row(i), &centroids[l * dim..(l + 1) * dim]);
            if d > far_d {
                far_d = d;
                far = Some(i);
            }
        }
        if let Some(i) = far {
            counts[labels[i]] -= 1;
            labels[i] = j;
            counts[j] = 1;
        }
    }
    let mut sums = vec![0.0; k * dim];
    for (i, &l) in labels.iter().enumerate() {
        for (s, x) in sums[l * dim..(l + 1) * dim].iter_mut().zip(row(i)) {
            *s += x;
        }
    }
    for j in 0..k {
        if counts[j] == 0 {
            continue;
        }
        let c = counts[j] as f64;
        for (dst, s) in centroids[j * dim..(j + 1) * dim].iter_mut().zip(&sums[j * dim..(j + 1) * dim]) {
            *dst = s / c;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn blobs() -> Vec<f64> {
        let mut v = Vec::new();
        for i in 0..10 {
            let t = i as f64 * 0.01;
            v.extend([t, -t]);
        }
        for i in 0..10 {
            let t = i as f64 * 0.01;
            v.extend([10.0 + t, 10.0 - t]);
        }
        v
    }

    #[test]
    fn separable_blobs() {
        let fit = fit(&blobs(), 2, 2, 42, DEFAULT_MAX_ITER).unwrap();
        assert!(fit.converged);
        let a = fit.labels[0];
        assert!(fit.labels[..10].iter().all(|&l| l == a));
        assert!(fit.labels[10..].iter().all(|&l| l != a));
    }

    #[test]
    fn n_equals_k_gives_singletons() {
        let data = [0.0, 1.0, 5.0, 9.0];
        let fit = fit(&data, 1, 4, 0, DEFAULT_MAX_ITER).unwrap();
        let mut l = fit.labels.clone();
        l.sort_unstable();
        l.dedup();
        assert_eq!(l.len(), 4);
        assert_eq!(fit.objective(), 0.0);
    }

    #[test]
    fn duplicates_with_more_clusters_than_distinct_points() {
        let data = [1.0, 1.0, 1.0, 2.0];
        let fit = fit(&data, 1, 3, 0, DEFAULT_MAX_ITER).unwrap();
        assert_eq!(fit.labels.len(), 4);
        assert!(fit.objective() < 1e-12);
    }

    #[test]
    fn deterministic() {
        let a = fit(&blobs(), 2, 3, 5, DEFAULT_MAX_ITER).unwrap();
        let b = fit(&blobs(), 2, 3, 5, DEFAULT_MAX_ITER).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_k_above_n() {
        assert!(fit(&[0.0, 1.0], 1, 3, 0, 10).is_err());
        assert!(fit(&[0.0, 1.0], 1, 0, 0, 10).is_err());
    }
}
