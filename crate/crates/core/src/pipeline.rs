//! End-to-end orchestration: alpha-labeling of clusters, classifier training
//! on clusters pooled from every experiment, high-influence cluster
//! prediction, and beta projection onto documents. Also the two baselines.
//!
//! Train/test protocol. Clusters are formed over all parts, since
//! clustering is unsupervised. A training example is a cluster restricted to
//! its train-document parts: features and alpha label are computed on those
//! parts only. At inference each cluster is featurized over its full
//! membership, with labels hidden, and predictions are projected onto test
//! documents only.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classify::{train_for_run, Backend, Model, TrainingExample};
use crate::cluster::{run_grid, Cluster, ClusterSet, ExperimentGrid};
use crate::corpus::{segment_corpus, Corpus, Granularity, Part, Split};
use crate::embed::{embed_parts, EmbeddingBackend, EmbeddingMatrix, DEFAULT_DIM};
use crate::error::{Error, Result};
use crate::eval::{aggregate_runs, score, AggregateReport, Gold, MetricsReport, Stat};
use crate::features::{featurize_sets, linguistic_features, FeatureContext, FeatureRow};
use crate::seed;

pub const DEFAULT_ALPHA: f64 = 0.95;
pub const DEFAULT_BETA: f64 = 0.2;

/// How a document accrues occurrences in high-influence clusters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Counting {
    /// One count per (part, high cluster) membership.
    #[default]
    Pairs,
    /// One count per high cluster containing any of the document's parts.
    DistinctClusters,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProjectionConfig {
    pub beta: f64,
    pub aggregation: bool,
    #[serde(default)]
    pub counting: Counting,
}

impl Default for ProjectionConfig {
    fn default() -> Self {
        ProjectionConfig {
            beta: DEFAULT_BETA,
            aggregation: true,
            counting: Counting::Pairs,
        }
    }
}

impl ProjectionConfig {
    /// `max(1, ceil(beta * H))` with aggregation, 1 without. A relative
    /// tolerance keeps products like `0.1 * 30` from rounding up past 3.
    pub fn threshold(&self, n_high: usize) -> usize {
        if !self.aggregation {
            return 1;
        }
        let x = self.beta * n_high as f64;
        let t = (x - 1e-9 * x.abs().max(1.0)).ceil();
        (t.max(1.0)) as usize
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ClusterRef {
    pub experiment_id: String,
    pub cluster_id: usize,
}

impl ClusterRef {
    pub fn of(c: &Cluster) -> Self {
        ClusterRef {
            experiment_id: c.experiment_id.clone(),
            cluster_id: c.cluster_id,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledCluster {
    pub cluster: ClusterRef,
    pub alpha: f64,
    pub campaign_fraction: f64,
    pub label: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DocumentPrediction {
    pub doc_id: String,
    pub predicted: bool,
    pub occurrence_count: usize,
    pub supporting_clusters: Vec<ClusterRef>,
    pub supporting_part_ids: Vec<String>,
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.5 && alpha <= 1.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("alpha must be in (0.5, 1], got {alpha}")))
    }
}

/// Fraction of `part_ids` whose document is a campaign document.
pub fn campaign_fraction<S: AsRef<str>>(part_ids: &[S], doc_label_of_part: &HashMap<&str, bool>) -> Result<f64> {
    if part_ids.is_empty() {
        return Err(Error::invalid("campaign fraction of an empty cluster"));
    }
    let mut pos = 0usize;
    for id in part_ids {
        let id = id.as_ref();
        let l = doc_label_of_part
            .get(id)
            .ok_or_else(|| Error::UnknownReference(format!("part_id {id} has no labeled document")))?;
        pos += usize::from(*l);
    }
    Ok(pos as f64 / part_ids.len() as f64)
}

fn part_labels<'a>(parts: &'a [Part], corpus: &Corpus) -> Result<HashMap<&'a str, bool>> {
    parts
        .iter()
        .map(|p| {
            let d = corpus
                .get(&p.doc_id)
                .ok_or_else(|| Error::UnknownReference(format!("part {} refers to unknown doc {}", p.part_id, p.doc_id)))?;
            Ok((p.part_id.as_str(), d.label))
        })
        .collect()
}

/// Alpha labels for every cluster of every set.
pub fn label_clusters(sets: &[ClusterSet], parts: &[Part], corpus: &Corpus, alpha: f64) -> Result<Vec<LabeledCluster>> {
    check_alpha(alpha)?;
    let labels = part_labels(parts, corpus)?;
    sets.iter()
        .flat_map(|s| &s.clusters)
        .map(|c| {
            let campaign_fraction = campaign_fraction(&c.part_ids, &labels)?;
            Ok(LabeledCluster {
                cluster: ClusterRef::of(c),
                alpha,
                campaign_fraction,
                label: campaign_fraction >= alpha,
            })
        })
        .collect()
}

/// Clusters whose predicted probability is at least 0.5.
pub fn predict_high_influence_clusters(model: &Model, rows: &[FeatureRow]) -> Result<Vec<ClusterRef>> {
    let mut out = Vec::new();
    for r in rows {
        if r.values.len() != model.n_features() {
            return Err(Error::DimensionMismatch {
                expected: model.n_features(),
                actual: r.values.len(),
            });
        }
        if model.predict_proba(&r.values)? >= 0.5 {
            out.push(ClusterRef {
                experiment_id: r.experiment_id.clone(),
                cluster_id: r.cluster_id,
            });
        }
    }
    Ok(out)
}

/// One prediction per document that has a part in `parts`, sorted by doc
/// id. Cluster members outside `parts` are ignored; `H` is the number of
/// clusters in `high_clusters`.
pub fn project_documents(high_clusters: &[&Cluster], parts: &[Part], config: &ProjectionConfig) -> Vec<DocumentPrediction> {
    let doc_of: HashMap<&str, &str> = parts.iter().map(|p| (p.part_id.as_str(), p.doc_id.as_str())).collect();
    let mut hits: BTreeMap<&str, (usize, BTreeSet<ClusterRef>, BTreeSet<&str>)> =
        parts.iter().map(|p| (p.doc_id.as_str(), Default::default())).collect();
    for c in high_clusters {
        let mut seen_docs: BTreeSet<&str> = BTreeSet::new();
        for pid in &c.part_ids {
            let Some(&doc) = doc_of.get(pid.as_str()) else {
                continue;
            };
            let entry = hits.get_mut(doc).expect("every part's doc is registered");
            let first_in_cluster = seen_docs.insert(doc);
            match config.counting {
                Counting::Pairs => entry.0 += 1,
                Counting::DistinctClusters => entry.0 += usize::from(first_in_cluster),
            }
            if first_in_cluster {
                entry.1.insert(ClusterRef::of(c));
            }
            entry.2.insert(pid.as_str());
        }
    }
    let threshold = config.threshold(high_clusters.len());
    hits.into_iter()
        .map(|(doc, (count, clusters, part_ids))| {
            let predicted = count >= threshold && count > 0;
            DocumentPrediction {
                doc_id: doc.to_string(),
                predicted,
                occurrence_count: count,
                supporting_clusters: if predicted { clusters.into_iter().collect() } else { Vec::new() },
                supporting_part_ids: if predicted {
                    part_ids.into_iter().map(str::to_string).collect()
                } else {
                    Vec::new()
                },
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbedConfig {
    pub dim: usize,
    /// Precomputed vectors (JSONL); the built-in hashed backend when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vectors: Option<PathBuf>,
}

impl Default for EmbedConfig {
    fn default() -> Self {
        EmbedConfig {
            dim: DEFAULT_DIM,
            vectors: None,
        }
    }
}

impl EmbedConfig {
    pub fn backend(&self) -> EmbeddingBackend {
        match &self.vectors {
            Some(p) => EmbeddingBackend::ExternalFile(p.clone()),
            None => EmbeddingBackend::BuiltinHash,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub granularity: Granularity,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spans: Option<PathBuf>,
    pub backend: Backend,
    pub alpha: f64,
    pub projection: ProjectionConfig,
    pub grid: ExperimentGrid,
    pub embed: EmbedConfig,
    pub runs: usize,
    pub seed: u64,
}

impl PipelineConfig {
    pub fn new(granularity: Granularity, grid: ExperimentGrid) -> Self {
        PipelineConfig {
            granularity,
            spans: None,
            backend: Backend::Gbdt,
            alpha: DEFAULT_ALPHA,
            projection: ProjectionConfig::default(),
            grid,
            embed: EmbedConfig::default(),
            runs: 5,
            seed: 0,
        }
    }

    fn embed_seed(&self) -> u64 {
        seed::derive(self.seed, 1)
    }

    fn grid_seeded(&self) -> ExperimentGrid {
        ExperimentGrid {
            base_seed: seed::derive(self.seed ^ self.grid.base_seed, 2),
            ..self.grid.clone()
        }
    }
}

/// Everything that does not depend on the classifier: parts, embeddings,
/// clusters, training examples, and inference features.
pub struct PreparedData {
    pub parts: Vec<Part>,
    pub embeddings: EmbeddingMatrix,
    pub cluster_sets: Vec<ClusterSet>,
    pub train_examples: Vec<TrainingExample>,
    pub train_clusters: Vec<LabeledCluster>,
    pub inference_rows: Vec<FeatureRow>,
    pub test_parts: Vec<Part>,
    pub gold: Gold,
}

impl PreparedData {
    pub fn cluster(&self, r: &ClusterRef) -> Option<&Cluster> {
        self.cluster_sets
            .iter()
            .find(|s| s.experiment_id == r.experiment_id)
            .and_then(|s| s.clusters.iter().find(|c| c.cluster_id == r.cluster_id))
    }

    fn clusters_of(&self, refs: &[ClusterRef]) -> Vec<&Cluster> {
        let by_exp: HashMap<&str, &ClusterSet> = self.cluster_sets.iter().map(|s| (s.experiment_id.as_str(), s)).collect();
        refs.iter()
            .map(|r| {
                let set = by_exp[r.experiment_id.as_str()];
                set.clusters
                    .iter()
                    .find(|c| c.cluster_id == r.cluster_id)
                    .expect("predicted cluster exists")
            })
            .collect()
    }
}

/// Parts whose document belongs to `split`.
pub fn parts_in_split(corpus: &Corpus, parts: &[Part], split: Split) -> Vec<Part> {
    parts
        .iter()
        .filter(|p| corpus.get(&p.doc_id).is_some_and(|d| d.split == split))
        .cloned()
        .collect()
}

/// One example per cluster restricted to its train-document parts; clusters
/// without any are skipped. Features and alpha labels see only those parts.
pub fn training_examples(
    corpus: &Corpus,
    parts: &[Part],
    ctx: &FeatureContext<'_>,
    sets: &[ClusterSet],
    alpha: f64,
) -> Result<(Vec<TrainingExample>, Vec<LabeledCluster>)> {
    check_alpha(alpha)?;
    let labels = part_labels(parts, corpus)?;
    let train_part: HashMap<&str, bool> = parts
        .iter()
        .map(|p| (p.part_id.as_str(), corpus.get(&p.doc_id).is_some_and(|d| d.split == Split::Train)))
        .collect();
    let is_train = |pid: &str| -> Result<bool> {
        train_part
            .get(pid)
            .copied()
            .ok_or_else(|| Error::UnknownReference(format!("cluster member {pid} is not a known part")))
    };
    let mut restricted = Vec::new();
    for c in sets.iter().flat_map(|s| &s.clusters) {
        let mut part_ids = Vec::new();
        for p in &c.part_ids {
            if is_train(p)? {
                part_ids.push(p.clone());
            }
        }
        if !part_ids.is_empty() {
            restricted.push(Cluster {
                part_ids,
                ..c.clone()
            });
        }
    }
    let rows: Vec<(TrainingExample, LabeledCluster)> = restricted
        .par_iter()
        .map(|c| {
            let fraction = campaign_fraction(&c.part_ids, &labels)?;
            let label = fraction >= alpha;
            let features = ctx.features(c)?.to_vec();
            Ok((
                TrainingExample::new(features, label),
                LabeledCluster {
                    cluster: ClusterRef::of(c),
                    alpha,
                    campaign_fraction: fraction,
                    label,
                },
            ))
        })
        .collect::<Result<_>>()?;
    Ok(rows.into_iter().unzip())
}

pub fn prepare(corpus: &Corpus, config: &PipelineConfig) -> Result<PreparedData> {
    check_alpha(config.alpha)?;
    let gold = Gold::from_corpus(corpus, Split::Test);
    if gold.is_empty() {
        return Err(Error::invalid("corpus has no test documents"));
    }
    let parts = segment_corpus(corpus, config.granularity, config.spans.as_deref())?;
    let embeddings = embed_parts(&parts, &config.embed.backend(), config.embed.dim, config.embed_seed())?;
    let cluster_sets = run_grid(&embeddings, &config.grid_seeded())?;
    if cluster_sets.is_empty() {
        return Err(Error::invalid("no clustering experiment could run on this corpus"));
    }
    let ctx = FeatureContext::new(&embeddings, &parts);
    let (train_examples, train_clusters) = training_examples(corpus, &parts, &ctx, &cluster_sets, config.alpha)?;
    let inference_rows = featurize_sets(&cluster_sets, &ctx)?;
    let test_parts = parts_in_split(corpus, &parts, Split::Test);
    Ok(PreparedData {
        parts,
        embeddings,
        cluster_sets,
        train_examples,
        train_clusters,
        inference_rows,
        test_parts,
        gold,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub run_index: usize,
    pub metrics: MetricsReport,
    pub n_high_clusters: usize,
    pub threshold: usize,
    /// Mean F1 over experiments with at least one predicted high cluster,
    /// each projected on its own with threshold 1.
    pub non_aggregated_f1: Option<f64>,
    pub n_experiments_with_high_clusters: usize,
    pub high_clusters: Vec<ClusterRef>,
    pub predictions: Vec<DocumentPrediction>,
}

pub fn run_once(data: &PreparedData, config: &PipelineConfig, run_index: usize) -> Result<RunReport> {
    // No cluster reaches alpha: nothing to learn, so nothing is flagged.
    let high = if data.train_examples.iter().any(|e| e.label) {
        let model = train_for_run(config.backend, &data.train_examples, run_index, config.seed)?;
        predict_high_influence_clusters(&model, &data.inference_rows)?
    } else {
        log::warn!("no training cluster reaches alpha {}; run {run_index} predicts no high clusters", config.alpha);
        Vec::new()
    };
    let high_clusters = data.clusters_of(&high);
    let predictions = project_documents(&high_clusters, &data.test_parts, &config.projection);
    let metrics = score(&predictions, &data.gold)?;

    let mut by_exp: BTreeMap<&str, Vec<&Cluster>> = BTreeMap::new();
    for c in &high_clusters {
        by_exp.entry(c.experiment_id.as_str()).or_default().push(c);
    }
    let single = ProjectionConfig {
        aggregation: false,
        ..config.projection
    };
    let per_exp: Vec<f64> = by_exp
        .values()
        .map(|cs| score(&project_documents(cs, &data.test_parts, &single), &data.gold).map(|m| m.f1))
        .collect::<Result<_>>()?;
    let non_aggregated_f1 = (!per_exp.is_empty()).then(|| per_exp.iter().sum::<f64>() / per_exp.len() as f64);
    Ok(RunReport {
        run_index,
        metrics,
        n_high_clusters: high.len(),
        threshold: config.projection.threshold(high.len()),
        non_aggregated_f1,
        n_experiments_with_high_clusters: per_exp.len(),
        high_clusters: high,
        predictions,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineReport {
    pub tool_version: String,
    pub method: String,
    pub config: PipelineConfig,
    pub n_documents: usize,
    pub n_test_documents: usize,
    pub n_parts: usize,
    pub n_experiments: usize,
    pub n_training_clusters: usize,
    pub n_positive_training_clusters: usize,
    pub summary: AggregateReport,
    pub non_aggregated_f1: Option<Stat>,
    pub runs: Vec<RunReport>,
}

fn method_name(config: &PipelineConfig) -> String {
    match config.granularity {
        Granularity::WholeDoc => "document-clustering".into(),
        g => format!("part-level-{}", g.cli_name()),
    }
}

/// Runs all steps for runs `1..=config.runs` and aggregates them.
pub fn run_full_pipeline(corpus: &Corpus, config: &PipelineConfig) -> Result<PipelineReport> {
    if config.runs == 0 {
        return Err(Error::invalid("runs must be at least 1"));
    }
    let data = prepare(corpus, config)?;
    report_from_prepared(corpus, config, &data)
}

pub fn report_from_prepared(corpus: &Corpus, config: &PipelineConfig, data: &PreparedData) -> Result<PipelineReport> {
    let runs: Vec<RunReport> = (1..=config.runs)
        .into_par_iter()
        .map(|k| run_once(data, config, k))
        .collect::<Result<_>>()?;
    let metrics: Vec<MetricsReport> = runs.iter().map(|r| r.metrics.clone()).collect();
    let na: Vec<f64> = runs.iter().filter_map(|r| r.non_aggregated_f1).collect();
    Ok(PipelineReport {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        method: method_name(config),
        config: config.clone(),
        n_documents: corpus.len(),
        n_test_documents: data.gold.len(),
        n_parts: data.parts.len(),
        n_experiments: data.cluster_sets.len(),
        n_training_clusters: data.train_examples.len(),
        n_positive_training_clusters: data.train_examples.iter().filter(|e| e.label).count(),
        summary: aggregate_runs(&metrics)?,
        non_aggregated_f1: (!na.is_empty()).then(|| Stat::of(&na)),
        runs,
    })
}

/// Same machinery with each document as a single part.
pub fn run_document_level_clustering_baseline(corpus: &Corpus, config: &PipelineConfig) -> Result<PipelineReport> {
    let config = PipelineConfig {
        granularity: Granularity::WholeDoc,
        spans: None,
        ..config.clone()
    };
    run_full_pipeline(corpus, &config)
}

/// Classifies test documents directly from their linguistic features.
/// Training must use the train split.
pub fn run_direct_document_baseline(
    corpus: &Corpus,
    backend: Backend,
    run_index: usize,
    seed: u64,
    train_on: Split,
) -> Result<Vec<DocumentPrediction>> {
    if train_on != Split::Train {
        return Err(Error::invalid("the direct baseline must be trained on the train split"));
    }
    let examples: Vec<TrainingExample> = corpus
        .in_split(Split::Train)
        .map(|d| TrainingExample::new(linguistic_features(&d.text).to_vec(), d.label))
        .collect();
    let model = train_for_run(backend, &examples, run_index, seed)?;
    corpus
        .in_split(Split::Test)
        .map(|d| {
            Ok(DocumentPrediction {
                doc_id: d.doc_id.clone(),
                predicted: model.predict_proba(&linguistic_features(&d.text))? >= 0.5,
                occurrence_count: 0,
                supporting_clusters: Vec::new(),
                supporting_part_ids: Vec::new(),
            })
        })
        .collect()
}

/// Direct baseline for runs `1..=runs`, scored and aggregated.
pub fn direct_baseline_report(corpus: &Corpus, backend: Backend, runs: usize, seed: u64) -> Result<(Vec<MetricsReport>, AggregateReport)> {
    let gold = Gold::from_corpus(corpus, Split::Test);
    let reports: Vec<MetricsReport> = (1..=runs)
        .into_par_iter()
        .map(|k| score(&run_direct_document_baseline(corpus, backend, k, seed, Split::Train)?, &gold))
        .collect::<Result<_>>()?;
    let agg = aggregate_runs(&reports)?;
    Ok((reports, agg))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Document, Media};

    fn cluster(exp: &str, id: usize, parts: &[&str]) -> Cluster {
        Cluster {
            cluster_id: id,
            part_ids: parts.iter().map(|s| s.to_string()).collect(),
            experiment_id: exp.into(),
        }
    }

    fn part(doc: &str, i: usize) -> Part {
        Part {
            part_id: format!("{doc}#s{i}"),
            doc_id: doc.into(),
            granularity: Granularity::Sentence,
            char_start: 0,
            char_end: 1,
            text: "x".into(),
        }
    }

    #[test]
    fn thresholds() {
        let on = ProjectionConfig::default();
        assert_eq!(on.threshold(10), 2);
        assert_eq!(on.threshold(0), 1);
        assert_eq!(on.threshold(11), 3);
        let tenth = ProjectionConfig { beta: 0.1, ..on };
        assert_eq!(tenth.threshold(30), 3);
        let zero = ProjectionConfig { beta: 0.0, ..on };
        assert_eq!(zero.threshold(50), 1);
        let off = ProjectionConfig {
            aggregation: false,
            ..on
        };
        assert_eq!(off.threshold(50), 1);
    }

    #[test]
    fn projection_examples() {
        let parts = vec![part("a", 0), part("a", 1), part("b", 0)];
        let c = cluster("e", 0, &["a#s0", "zz#s0"]);
        let off = ProjectionConfig {
            aggregation: false,
            ..Default::default()
        };
        let preds = project_documents(&[&c], &parts, &off);
        assert_eq!(preds.len(), 2);
        assert!(preds[0].predicted && !preds[1].predicted);
        assert_eq!(preds[0].supporting_part_ids, vec!["a#s0".to_string()]);
        assert!(preds[1].supporting_clusters.is_empty());

        // H = 10, beta = 0.2: one occurrence is below threshold 2.
        let others: Vec<Cluster> = (1..10).map(|i| cluster("e", i, &["nobody"])).collect();
        let mut high: Vec<&Cluster> = vec![&c];
        high.extend(others.iter());
        let preds = project_documents(&high, &parts, &ProjectionConfig::default());
        assert_eq!(preds[0].occurrence_count, 1);
        assert!(!preds[0].predicted);
        assert!(preds[0].supporting_clusters.is_empty());
    }

    #[test]
    fn pair_vs_distinct_counting() {
        let parts = vec![part("a", 0), part("a", 1)];
        let c = cluster("e", 0, &["a#s0", "a#s1"]);
        let pairs = project_documents(&[&c], &parts, &ProjectionConfig::default());
        assert_eq!(pairs[0].occurrence_count, 2);
        let distinct = ProjectionConfig {
            counting: Counting::DistinctClusters,
            ..Default::default()
        };
        assert_eq!(project_documents(&[&c], &parts, &distinct)[0].occurrence_count, 1);
    }

    #[test]
    fn alpha_examples() {
        let mut docs = Vec::new();
        let mut parts = Vec::new();
        for i in 0..20 {
            docs.push(Document {
                doc_id: format!("d{i}"),
                media: Media::Forum,
                text: "t".into(),
                label: i < 19,
                split: Split::Train,
            });
            parts.push(part(&format!("d{i}"), 0));
        }
        let corpus = Corpus::new(docs).unwrap();
        let all: Vec<String> = parts.iter().map(|p| p.part_id.clone()).collect();
        let refs: Vec<&str> = all.iter().map(String::as_str).collect();
        let set = |ids: &[&str]| ClusterSet {
            experiment_id: "e".into(),
            config: ExperimentGrid::reduced(0).configs()[0],
            clusters: vec![cluster("e", 0, ids)],
            noise: Vec::new(),
        };
        let l = label_clusters(&[set(&refs)], &parts, &corpus, 0.95).unwrap();
        assert!((l[0].campaign_fraction - 0.95).abs() < 1e-15 && l[0].label);
        // Drop one campaign part: 18 / 19.
        let mut fewer = refs.clone();
        fewer.remove(0);
        fewer.remove(0);
        let l = label_clusters(&[set(&fewer)], &parts, &corpus, 0.95).unwrap();
        assert!(!l[0].label);
        let l = label_clusters(&[set(&refs)], &parts, &corpus, 1.0).unwrap();
        assert!(!l[0].label);
        assert!(label_clusters(&[set(&["ghost"])], &parts, &corpus, 0.95).is_err());
        assert!(label_clusters(&[set(&refs)], &parts, &corpus, 0.5).is_err());
    }
}
