use std::collections::HashMap;

use campaign_detect::cluster::{hdbscan, kmeans, pca::PcaModel, run_grid, ExperimentGrid, HdbscanGrid, KMeansGrid};
use campaign_detect::embed::EmbeddingMatrix;
use campaign_detect::seed;
use proptest::prelude::*;
use rand::Rng;
use serde::Deserialize;

#[derive(Deserialize)]
struct HdbscanFixture {
    min_cluster_size: usize,
    points: Vec<Vec<f64>>,
    labels: Vec<i64>,
}

fn load_fixture(name: &str) -> HdbscanFixture {
    let path = format!("{}/tests/fixtures/{name}", env!("CARGO_MANIFEST_DIR"));
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

/// Best agreement over injective relabelings of our clusters onto the
/// reference clusters; noise only matches noise.
fn agreement(ours: &[Option<usize>], reference: &[i64]) -> f64 {
    let k_ours = ours.iter().flatten().max().map_or(0, |m| m + 1);
    let k_ref = reference.iter().filter(|&&l| l >= 0).max().map_or(0, |&m| m as usize + 1);
    let mut best = 0;
    // Assign each of our clusters a reference cluster or none, injectively.
    fn search(
        i: usize,
        k_ours: usize,
        k_ref: usize,
        map: &mut Vec<Option<usize>>,
        used: &mut Vec<bool>,
        ours: &[Option<usize>],
        reference: &[i64],
        best: &mut usize,
    ) {
        if i == k_ours {
            let hits = ours
                .iter()
                .zip(reference)
                .filter(|(o, &r)| match o {
                    None => r < 0,
                    Some(c) => map[*c].is_some_and(|m| m as i64 == r),
                })
                .count();
            *best = (*best).max(hits);
            return;
        }
        map[i] = None;
        search(i + 1, k_ours, k_ref, map, used, ours, reference, best);
        for r in 0..k_ref {
            if !used[r] {
                used[r] = true;
                map[i] = Some(r);
                search(i + 1, k_ours, k_ref, map, used, ours, reference, best);
                used[r] = false;
            }
        }
    }
    search(0, k_ours, k_ref, &mut vec![None; k_ours], &mut vec![false; k_ref], ours, reference, &mut best);
    best as f64 / ours.len() as f64
}

#[test]
fn hdbscan_matches_reference_on_two_blobs() {
    let fx = load_fixture("hdbscan_two_blobs.json");
    let data: Vec<f64> = fx.points.iter().flatten().copied().collect();
    let fit = hdbscan::fit(&data, 2, fx.min_cluster_size).unwrap();
    assert_eq!(fit.n_clusters, 2);
    let a = agreement(&fit.labels, &fx.labels);
    assert!(a >= 0.95, "agreement {a}");
}

#[test]
fn hdbscan_uniform_points_are_all_noise() {
    let fx = load_fixture("hdbscan_uniform.json");
    let data: Vec<f64> = fx.points.iter().flatten().copied().collect();
    let fit = hdbscan::fit(&data, 2, fx.min_cluster_size).unwrap();
    assert!(fx.labels.iter().all(|&l| l == -1));
    assert_eq!(fit.n_clusters, 0);
    assert!(fit.labels.iter().all(Option::is_none));
}

fn random_rows(seed: u64, n: usize, dim: usize) -> Vec<f64> {
    let mut rng = seed::rng(seed);
    (0..n * dim).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect()
}

#[test]
fn pca_eigenvalues_match_dense_solver() {
    let (n, dim) = (50, 16);
    let data = random_rows(17, n, dim);
    let model = PcaModel::fit(&data, dim, dim, None).unwrap();

    let x = nalgebra::DMatrix::from_row_slice(n, dim, &data);
    let mean = x.row_mean();
    let centered = nalgebra::DMatrix::from_fn(n, dim, |i, j| x[(i, j)] - mean[j]);
    let cov = centered.transpose() * &centered / (n as f64 - 1.0);
    let eig = nalgebra::SymmetricEigen::new(cov);
    let mut oracle: Vec<(f64, usize)> = eig.eigenvalues.iter().copied().zip(0..).collect();
    oracle.sort_by(|a, b| b.0.total_cmp(&a.0));

    for (k, &(val, col)) in oracle.iter().enumerate() {
        assert!((model.explained_variance[k] - val).abs() < 1e-10, "eigenvalue {k}");
        let ours = &model.components[k * dim..(k + 1) * dim];
        let theirs = eig.eigenvectors.column(col);
        let d: f64 = ours.iter().zip(theirs.iter()).map(|(a, b)| a * b).sum();
        assert!((d.abs() - 1.0).abs() < 1e-8, "eigenvector {k} alignment {d}");
    }
    assert!(model.explained_variance.windows(2).all(|w| w[0] >= w[1]));
}

#[test]
fn pca_retained_variance_grows_with_target_dim() {
    let (n, dim) = (60, 12);
    let data = random_rows(3, n, dim);
    let ids: Vec<String> = (0..n).map(|i| format!("p{i}")).collect();
    let m = EmbeddingMatrix::new(ids, data, dim, "t").unwrap();
    let mut last = 0.0;
    for d in 1..=dim {
        let r = campaign_detect::cluster::pca_reduce(&m, d).unwrap();
        let mean: Vec<f64> = (0..d).map(|j| r.rows().map(|x| x[j]).sum::<f64>() / n as f64).collect();
        let var: f64 = r.rows().map(|x| x.iter().zip(&mean).map(|(a, b)| (a - b).powi(2)).sum::<f64>()).sum();
        assert!(var >= last - 1e-9);
        last = var;
    }
}

#[test]
fn pca_roundtrip_at_full_rank() {
    let data = random_rows(5, 20, 6);
    let m = PcaModel::fit(&data, 6, 6, None).unwrap();
    let back = m.inverse_transform(&m.transform(&data, 6), 6);
    for (a, b) in data.iter().zip(&back) {
        assert!((a - b).abs() < 1e-10);
    }
}

fn check_kmeans_invariants(data: &[f64], dim: usize, k: usize, s: u64) {
    let fit = kmeans::fit(data, dim, k, s, kmeans::DEFAULT_MAX_ITER).unwrap();
    let n = data.len() / dim;
    assert_eq!(fit.labels.len(), n);
    assert!(fit.labels.iter().all(|&l| l < k));
    for w in fit.objective_history.windows(2) {
        assert!(w[1] <= w[0] + 1e-9 * w[0].abs().max(1.0), "objective rose: {w:?}");
    }
    for j in 0..k {
        let members: Vec<usize> = (0..n).filter(|&i| fit.labels[i] == j).collect();
        if members.is_empty() {
            continue;
        }
        for d in 0..dim {
            let mean = members.iter().map(|&i| data[i * dim + d]).sum::<f64>() / members.len() as f64;
            assert!((fit.centroids[j * dim + d] - mean).abs() < 1e-6);
        }
    }
    assert_eq!(fit, kmeans::fit(data, dim, k, s, kmeans::DEFAULT_MAX_ITER).unwrap());
}

#[test]
fn kmeans_invariants_on_random_instances() {
    let mut rng = seed::rng(99);
    for inst in 0..50u64 {
        let n = rng.random_range(5..80);
        let dim = rng.random_range(1..6);
        let k = rng.random_range(2..=n.min(8));
        check_kmeans_invariants(&random_rows(inst, n, dim), dim, k, inst);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn hdbscan_clusters_respect_min_size(
        pts in prop::collection::vec((-5.0f64..5.0, -5.0f64..5.0), 10..80),
        m in 2usize..10,
    ) {
        prop_assume!(pts.len() >= m);
        let data: Vec<f64> = pts.iter().flat_map(|&(a, b)| [a, b]).collect();
        let fit = hdbscan::fit(&data, 2, m).unwrap();
        let mut sizes: HashMap<usize, usize> = HashMap::new();
        for l in fit.labels.iter().flatten() {
            *sizes.entry(*l).or_default() += 1;
        }
        prop_assert_eq!(sizes.len(), fit.n_clusters);
        for (_, s) in sizes {
            prop_assert!(s >= m);
        }
    }

    #[test]
    fn run_grid_count_is_arithmetic_minus_skips(n in 8usize..40, ks in prop::collection::vec(2usize..60, 1..4)) {
        let ids: Vec<String> = (0..n).map(|i| format!("p{i}")).collect();
        let m = EmbeddingMatrix::new(ids, random_rows(n as u64, n, 3), 3, "t").unwrap();
        let grid = ExperimentGrid {
            kmeans: KMeansGrid { ks: ks.clone(), repeats: 2 },
            hdbscan: HdbscanGrid { min_cluster_sizes: vec![4, 50], reduced_dims: vec![2, 3], repeats: 1 },
            base_seed: 1,
        };
        let skipped = 2 * ks.iter().filter(|&&k| k > n).count() + 2 * usize::from(n < 50);
        let sets = run_grid(&m, &grid).unwrap();
        prop_assert_eq!(sets.len(), grid.experiment_count() - skipped);
        for s in &sets {
            let total: usize = s.clusters.iter().map(|c| c.part_ids.len()).sum::<usize>() + s.noise.len();
            prop_assert_eq!(total, n);
        }
    }
}
