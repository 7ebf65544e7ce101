//! Clustering experiments over part embeddings.
//!
//! KMeans runs on the raw embeddings. HDBSCAN runs on PCA-reduced
//! embeddings; each repeat fits its PCA basis on a seeded subsample of the
//! rows, which gives repeats the small variations a stochastic reducer would.

pub mod hdbscan;
pub mod kmeans;
pub mod pca;

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::seq::index::sample;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::embed::EmbeddingMatrix;
use crate::error::{Error, Result};
use crate::seed;

pub use pca::{pca_reduce, PcaModel};

/// Fraction of rows each HDBSCAN repeat fits its PCA basis on.
pub const PCA_FIT_FRACTION: f64 = 0.8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Algorithm {
    KMeans { k: usize },
    Hdbscan { min_cluster_size: usize, reduced_dim: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ClusteringConfig {
    pub algorithm: Algorithm,
    pub repeat_index: usize,
    pub seed: u64,
}

impl ClusteringConfig {
    pub fn experiment_id(&self) -> String {
        match self.algorithm {
            Algorithm::KMeans { k } => format!("kmeans-k{k}-r{}", self.repeat_index),
            Algorithm::Hdbscan {
                min_cluster_size,
                reduced_dim,
            } => format!("hdbscan-m{min_cluster_size}-d{reduced_dim}-r{}", self.repeat_index),
        }
    }

    /// Why this config cannot run on `n` points of dimension `dim`, if it can't.
    pub fn infeasible(&self, n: usize, dim: usize) -> Option<String> {
        match self.algorithm {
            Algorithm::KMeans { k } if k < 2 => Some(format!("k = {k} is below 2")),
            Algorithm::KMeans { k } if k > n => Some(format!("k = {k} exceeds {n} parts")),
            Algorithm::KMeans { .. } => None,
            Algorithm::Hdbscan {
                min_cluster_size,
                reduced_dim,
            } => {
                if min_cluster_size < 2 {
                    Some(format!("min_cluster_size {min_cluster_size} is below 2"))
                } else if n < min_cluster_size {
                    Some(format!("{n} parts is fewer than min_cluster_size {min_cluster_size}"))
                } else if reduced_dim < 2 || reduced_dim > dim || reduced_dim > n {
                    Some(format!("reduced_dim {reduced_dim} invalid for {n} parts of dim {dim}"))
                } else {
                    None
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cluster {
    pub cluster_id: usize,
    pub part_ids: Vec<String>,
    pub experiment_id: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterSet {
    pub experiment_id: String,
    pub config: ClusteringConfig,
    pub clusters: Vec<Cluster>,
    pub noise: Vec<String>,
}

impl ClusterSet {
    fn from_labels(config: ClusteringConfig, part_ids: &[String], labels: impl Iterator<Item = Option<usize>>) -> Self {
        let experiment_id = config.experiment_id();
        let mut groups: BTreeMap<usize, Vec<String>> = BTreeMap::new();
        let mut noise = Vec::new();
        for (id, l) in part_ids.iter().zip(labels) {
            match l {
                Some(c) => groups.entry(c).or_default().push(id.clone()),
                None => noise.push(id.clone()),
            }
        }
        let clusters = groups
            .into_values()
            .enumerate()
            .map(|(i, part_ids)| Cluster {
                cluster_id: i,
                part_ids,
                experiment_id: experiment_id.clone(),
            })
            .collect();
        ClusterSet {
            experiment_id,
            config,
            clusters,
            noise,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KMeansGrid {
    pub ks: Vec<usize>,
    pub repeats: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HdbscanGrid {
    pub min_cluster_sizes: Vec<usize>,
    pub reduced_dims: Vec<usize>,
    pub repeats: usize,
}

/// Declarative set of clustering configurations. Serialized as TOML with
/// `kmeans.ks`, `kmeans.repeats`, `hdbscan.min_cluster_sizes`,
/// `hdbscan.reduced_dims`, `hdbscan.repeats` and `base_seed`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExperimentGrid {
    pub kmeans: KMeansGrid,
    pub hdbscan: HdbscanGrid,
    #[serde(default)]
    pub base_seed: u64,
}

impl ExperimentGrid {
    /// 15 k values x 3 repeats plus 10 minimum sizes x 3 reduced dims x 3
    /// repeats: 135 experiments.
    pub fn paper_default(base_seed: u64) -> Self {
        ExperimentGrid {
            kmeans: KMeansGrid {
                ks: vec![10, 20, 30, 40, 50, 60, 70, 80, 90, 100, 150, 200, 250, 300, 500],
                repeats: 3,
            },
            hdbscan: HdbscanGrid {
                min_cluster_sizes: vec![10, 20, 40, 80, 100, 150, 200, 300, 400, 500],
                reduced_dims: vec![10, 30, 50],
                repeats: 3,
            },
            base_seed,
        }
    }

    /// A 27-experiment grid sized for corpora of a few thousand parts.
    pub fn reduced(base_seed: u64) -> Self {
        ExperimentGrid {
            kmeans: KMeansGrid {
                ks: vec![10, 20, 40],
                repeats: 3,
            },
            hdbscan: HdbscanGrid {
                min_cluster_sizes: vec![10, 20, 40],
                reduced_dims: vec![10, 30],
                repeats: 3,
            },
            base_seed,
        }
    }

    pub fn experiment_count(&self) -> usize {
        self.kmeans.ks.len() * self.kmeans.repeats
            + self.hdbscan.min_cluster_sizes.len() * self.hdbscan.reduced_dims.len() * self.hdbscan.repeats
    }

    /// All configurations in grid order; seeds derive from `base_seed` and
    /// the position in that order.
    pub fn configs(&self) -> Vec<ClusteringConfig> {
        let mut algos = Vec::with_capacity(self.experiment_count());
        for &k in &self.kmeans.ks {
            for r in 0..self.kmeans.repeats {
                algos.push((Algorithm::KMeans { k }, r));
            }
        }
        for &m in &self.hdbscan.min_cluster_sizes {
            for &d in &self.hdbscan.reduced_dims {
                for r in 0..self.hdbscan.repeats {
                    algos.push((
                        Algorithm::Hdbscan {
                            min_cluster_size: m,
                            reduced_dim: d,
                        },
                        r,
                    ));
                }
            }
        }
        algos
            .into_iter()
            .enumerate()
            .map(|(pos, (algorithm, repeat_index))| ClusteringConfig {
                algorithm,
                repeat_index,
                seed: seed::derive(self.base_seed, pos as u64),
            })
            .collect()
    }

    pub fn from_toml_str(s: &str) -> Result<Self> {
        toml::from_str(s).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let s = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&s).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("grid serializes")
    }
}

/// Clusters all rows of `matrix` into `k` groups.
pub fn kmeans(matrix: &EmbeddingMatrix, config: ClusteringConfig, max_iter: usize) -> Result<ClusterSet> {
    let Algorithm::KMeans { k } = config.algorithm else {
        return Err(Error::invalid("kmeans called with a non-KMeans config"));
    };
    let fit = kmeans::fit(matrix.as_slice(), matrix.dim(), k, config.seed, max_iter)?;
    Ok(ClusterSet::from_labels(
        config,
        matrix.part_ids(),
        fit.labels.into_iter().map(Some),
    ))
}

/// HDBSCAN directly on the rows of `matrix` (no reduction).
pub fn hdbscan(matrix: &EmbeddingMatrix, config: ClusteringConfig) -> Result<ClusterSet> {
    let Algorithm::Hdbscan { min_cluster_size, .. } = config.algorithm else {
        return Err(Error::invalid("hdbscan called with a non-HDBSCAN config"));
    };
    let fit = hdbscan::fit(matrix.as_slice(), matrix.dim(), min_cluster_size)?;
    Ok(ClusterSet::from_labels(config, matrix.part_ids(), fit.labels.into_iter()))
}

/// Runs every feasible configuration of the grid. Infeasible ones (e.g.
/// `k > N` on a small corpus) are skipped with a warning.
pub fn run_grid(matrix: &EmbeddingMatrix, grid: &ExperimentGrid) -> Result<Vec<ClusterSet>> {
    let n = matrix.len();
    let dim = matrix.dim();
    let configs: Vec<ClusteringConfig> = grid
        .configs()
        .into_iter()
        .filter(|c| match c.infeasible(n, dim) {
            Some(why) => {
                log::warn!("skipping experiment {}: {why}", c.experiment_id());
                false
            }
            None => true,
        })
        .collect();

    // One PCA basis per HDBSCAN repeat, wide enough for every reduced dim.
    let mut bases: BTreeMap<usize, usize> = BTreeMap::new();
    for c in &configs {
        if let Algorithm::Hdbscan { reduced_dim, .. } = c.algorithm {
            let e = bases.entry(c.repeat_index).or_insert(0);
            *e = (*e).max(reduced_dim);
        }
    }
    let fit_rows = ((n as f64 * PCA_FIT_FRACTION).round() as usize).clamp(1, n);
    let pca: BTreeMap<usize, PcaModel> = bases
        .into_par_iter()
        .map(|(repeat, width)| {
            let mut rng = seed::rng(seed::derive(grid.base_seed ^ 0x5043_4131, repeat as u64));
            let mut rows = sample(&mut rng, n, fit_rows.max(width)).into_vec();
            rows.sort_unstable();
            PcaModel::fit(matrix.as_slice(), dim, width, Some(&rows)).map(|m| (repeat, m))
        })
        .collect::<Result<_>>()?;

    configs
        .into_par_iter()
        .map(|c| match c.algorithm {
            Algorithm::KMeans { .. } => kmeans(matrix, c, kmeans::DEFAULT_MAX_ITER),
            Algorithm::Hdbscan {
                min_cluster_size,
                reduced_dim,
            } => {
                let reduced = pca[&c.repeat_index].transform(matrix.as_slice(), reduced_dim);
                let fit = hdbscan::fit(&reduced, reduced_dim, min_cluster_size)?;
                Ok(ClusterSet::from_labels(c, matrix.part_ids(), fit.labels.into_iter()))
            }
        })
        .collect()
}

#[derive(Debug, Serialize, Deserialize)]
struct ClusterRecord {
    experiment_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    cluster_id: Option<usize>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    noise: bool,
    part_ids: Vec<String>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ExperimentRecord {
    experiment_id: String,
    config: ClusteringConfig,
}

pub const CLUSTERS_FILE: &str = "clusters.jsonl";
pub const EXPERIMENTS_FILE: &str = "experiments.jsonl";

/// Writes `clusters.jsonl` (one line per cluster plus one noise line per
/// experiment) and `experiments.jsonl` into `dir`.
pub fn write_cluster_sets(sets: &[ClusterSet], dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let cpath = dir.join(CLUSTERS_FILE);
    let epath = dir.join(EXPERIMENTS_FILE);
    let mut cw = BufWriter::new(File::create(&cpath).map_err(|e| Error::io(&cpath, e))?);
    let mut ew = BufWriter::new(File::create(&epath).map_err(|e| Error::io(&epath, e))?);
    for s in sets {
        serde_json::to_writer(
            &mut ew,
            &ExperimentRecord {
                experiment_id: s.experiment_id.clone(),
                config: s.config,
            },
        )?;
        ew.write_all(b"\n").map_err(|e| Error::io(&epath, e))?;
        for c in &s.clusters {
            serde_json::to_writer(
                &mut cw,
                &ClusterRecord {
                    experiment_id: s.experiment_id.clone(),
                    cluster_id: Some(c.cluster_id),
                    noise: false,
                    part_ids: c.part_ids.clone(),
                },
            )?;
            cw.write_all(b"\n").map_err(|e| Error::io(&cpath, e))?;
        }
        serde_json::to_writer(
            &mut cw,
            &ClusterRecord {
                experiment_id: s.experiment_id.clone(),
                cluster_id: None,
                noise: true,
                part_ids: s.noise.clone(),
            },
        )?;
        cw.write_all(b"\n").map_err(|e| Error::io(&cpath, e))?;
    }
    cw.flush().map_err(|e| Error::io(&cpath, e))?;
    ew.flush().map_err(|e| Error::io(&epath, e))
}

pub fn read_cluster_sets(dir: &Path) -> Result<Vec<ClusterSet>> {
    let epath = dir.join(EXPERIMENTS_FILE);
    let cpath = dir.join(CLUSTERS_FILE);
    let mut sets: Vec<ClusterSet> = Vec::new();
    let mut position: BTreeMap<String, usize> = BTreeMap::new();
    for (line, rec) in read_jsonl::<ExperimentRecord>(&epath)? {
        if position.contains_key(&rec.experiment_id) {
            return Err(Error::Parse {
                path: epath.clone(),
                line,
                message: format!("duplicate experiment {}", rec.experiment_id),
            });
        }
        position.insert(rec.experiment_id.clone(), sets.len());
        sets.push(ClusterSet {
            experiment_id: rec.experiment_id,
            config: rec.config,
            clusters: Vec::new(),
            noise: Vec::new(),
        });
    }
    for (line, rec) in read_jsonl::<ClusterRecord>(&cpath)? {
        let &i = position.get(&rec.experiment_id).ok_or_else(|| Error::Parse {
            path: cpath.clone(),
            line,
            message: format!("unknown experiment {}", rec.experiment_id),
        })?;
        let set = &mut sets[i];
        match (rec.noise, rec.cluster_id) {
            (true, _) => set.noise.extend(rec.part_ids),
            (false, Some(cluster_id)) => set.clusters.push(Cluster {
                cluster_id,
                part_ids: rec.part_ids,
                experiment_id: rec.experiment_id,
            }),
            (false, None) => {
                return Err(Error::Parse {
                    path: cpath.clone(),
                    line,
                    message: "cluster record without cluster_id".into(),
                })
            }
        }
    }
    Ok(sets)
}

fn read_jsonl<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<(usize, T)>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec = serde_json::from_str(&line).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            message: e.to_string(),
        })?;
        out.push((i + 1, rec));
    }
    Ok(out)
}
