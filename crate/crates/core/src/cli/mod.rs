//! Command-line front end. Every stage reads and writes plain files; each
//! invocation leaves a `<output>.manifest.json` next to its main output.
//!
//! Exit codes: 0 on success, 1 when a stage fails (one `error[<category>]:`
//! line on stderr), 2 for usage errors.

pub mod manifest;

use std::collections::{BTreeMap, HashMap};
use std::ffi::OsString;
use std::fs::{self, File};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::classify::{train_for_run, Backend, Model, TrainingExample};
use crate::cluster::{read_cluster_sets, run_grid, write_cluster_sets, Cluster, ExperimentGrid};
use crate::corpus::{
    ingest_corpus, read_parts_jsonl, segment_corpus, split_corpus, write_parts_jsonl, Corpus, CorpusFormat, Granularity,
    Split,
};
use crate::embed::{embed_parts, EmbeddingBackend, EmbeddingMatrix, DEFAULT_DIM};
use crate::error::{Error, Result};
use crate::eval::{
    format_error_table, format_performance_table, score, sweep_beta, write_beta_csv, AggregateReport, Gold,
};
use crate::features::{
    feature_names, featurize_sets, read_features_csv, write_features_csv, FeatureContext, FeatureRow,
};
use crate::pipeline::{
    self, parts_in_split, predict_high_influence_clusters, prepare, project_documents, report_from_prepared,
    training_examples, ClusterRef, Counting, DocumentPrediction, EmbedConfig, LabeledCluster, PipelineConfig,
    ProjectionConfig, DEFAULT_ALPHA, DEFAULT_BETA,
};
use crate::synthgen::{emit_verb_trigram_spans, generate, write_spans_jsonl, SynthConfig};
use manifest::{hash_all, manifest_path, unix_now, verify_sibling, RunManifest};

/// Environment variable holding the default artifact root.
pub const ARTIFACT_ROOT_ENV: &str = "CAMPAIGN_DETECT_ARTIFACTS";

#[derive(Debug, Parser)]
#[command(name = "campaign-detect", version, about = "Detect coordinated campaign documents by clustering their parts")]
pub struct Cli {
    /// Directory that relative artifact paths resolve against.
    #[arg(long, global = true, env = ARTIFACT_ROOT_ENV, value_name = "DIR")]
    pub artifacts: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic labeled corpus.
    Gen(GenArgs),
    /// Split documents into parts.
    Segment(SegmentArgs),
    /// Embed parts.
    Embed(EmbedArgs),
    /// Run the clustering grid over embeddings.
    Cluster(ClusterArgs),
    /// Compute cluster features (and alpha labels for training).
    Featurize(FeaturizeArgs),
    /// Train a cluster classifier.
    Train(TrainArgs),
    /// Predict high-influence clusters and project them onto test documents.
    Predict(PredictArgs),
    /// Score document predictions against gold labels.
    Evaluate(EvaluateArgs),
    /// Run the whole pipeline for runs 1..=N.
    Run(RunArgs),
    /// Precision, recall and F1 over a range of beta values.
    SweepBeta(SweepBetaArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum GranularityArg {
    Doc,
    Sentence,
    TargetAll,
    TargetAt,
}

impl From<GranularityArg> for Granularity {
    fn from(g: GranularityArg) -> Self {
        match g {
            GranularityArg::Doc => Granularity::WholeDoc,
            GranularityArg::Sentence => Granularity::Sentence,
            GranularityArg::TargetAll => Granularity::TargetAll,
            GranularityArg::TargetAt => Granularity::TargetAt,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BackendArg {
    Gbdt,
    Fnn,
}

impl From<BackendArg> for Backend {
    fn from(b: BackendArg) -> Self {
        match b {
            BackendArg::Gbdt => Backend::Gbdt,
            BackendArg::Fnn => Backend::Fnn,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Switch {
    On,
    Off,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CountingArg {
    Pairs,
    Distinct,
}

impl From<CountingArg> for Counting {
    fn from(c: CountingArg) -> Self {
        match c {
            CountingArg::Pairs => Counting::Pairs,
            CountingArg::Distinct => Counting::DistinctClusters,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum EmbedBackendArg {
    Hash,
    File,
}

/// Used when a corpus arrives without any test documents.
#[derive(Debug, Clone, Args, Serialize)]
pub struct SplitArgs {
    /// Training share of a corpus that has no test documents yet.
    #[arg(long, default_value_t = 0.8)]
    pub train_fraction: f64,
    #[arg(long, default_value_t = 0)]
    pub split_seed: u64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ProjectionArgs {
    #[arg(long, default_value_t = DEFAULT_BETA)]
    pub beta: f64,
    #[arg(long, value_enum, default_value_t = Switch::On)]
    pub aggregate: Switch,
    /// How a document's occurrences in high clusters are counted.
    #[arg(long, value_enum, default_value_t = CountingArg::Pairs)]
    pub counting: CountingArg,
}

impl ProjectionArgs {
    fn config(&self) -> ProjectionConfig {
        ProjectionConfig {
            beta: self.beta,
            aggregation: matches!(self.aggregate, Switch::On),
            counting: self.counting.into(),
        }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct GenArgs {
    /// Generator config (TOML); built-in defaults when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    /// Gold labels of the test split.
    #[arg(long)]
    pub gold: PathBuf,
    /// Also write a heuristic belief-span sidecar.
    #[arg(long)]
    pub spans: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub n_docs: Option<usize>,
}

#[derive(Debug, Args, Serialize)]
pub struct SegmentArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long, value_enum, default_value_t = GranularityArg::Sentence)]
    pub granularity: GranularityArg,
    /// Belief-span sidecar, required by the target granularities.
    #[arg(long)]
    pub spans: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct EmbedArgs {
    #[arg(long)]
    pub parts: PathBuf,
    #[arg(long, value_enum, default_value_t = EmbedBackendArg::Hash)]
    pub backend: EmbedBackendArg,
    #[arg(long, default_value_t = DEFAULT_DIM)]
    pub dim: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Precomputed vectors for the file backend.
    #[arg(long)]
    pub vectors: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct ClusterArgs {
    #[arg(long)]
    pub embeddings: PathBuf,
    /// `paper`, `reduced`, or a grid TOML file.
    #[arg(long, default_value = "paper")]
    pub grid: String,
    /// Overrides the grid's base seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct FeaturizeArgs {
    #[arg(long)]
    pub clusters: PathBuf,
    #[arg(long)]
    pub embeddings: PathBuf,
    #[arg(long)]
    pub parts: PathBuf,
    /// Features of every cluster, for inference.
    #[arg(long)]
    pub out: PathBuf,
    /// With --train-features and --labels: also write training rows.
    #[arg(long, requires_all = ["train_features", "labels"])]
    pub corpus: Option<PathBuf>,
    /// Features of clusters restricted to training documents.
    #[arg(long, requires = "corpus")]
    pub train_features: Option<PathBuf>,
    /// Alpha labels of the training rows.
    #[arg(long, requires = "corpus")]
    pub labels: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_ALPHA)]
    pub alpha: f64,
    #[command(flatten)]
    pub split: SplitArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct TrainArgs {
    #[arg(long, value_enum, default_value_t = BackendArg::Gbdt)]
    pub backend: BackendArg,
    #[arg(long)]
    pub features: PathBuf,
    #[arg(long)]
    pub labels: PathBuf,
    /// Run index (1-based); sets the GBDT depth and the FNN seed.
    #[arg(long, default_value_t = 1)]
    pub run: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub features: PathBuf,
    #[arg(long)]
    pub clusters: PathBuf,
    #[arg(long)]
    pub parts: PathBuf,
    #[arg(long)]
    pub corpus: PathBuf,
    #[command(flatten)]
    pub projection: ProjectionArgs,
    #[command(flatten)]
    pub split: SplitArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub predictions: PathBuf,
    #[arg(long)]
    pub gold: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct PipelineArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long, value_enum, default_value_t = GranularityArg::Sentence)]
    pub granularity: GranularityArg,
    #[arg(long)]
    pub spans: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = BackendArg::Gbdt)]
    pub backend: BackendArg,
    #[arg(long, default_value_t = DEFAULT_ALPHA)]
    pub alpha: f64,
    #[command(flatten)]
    pub projection: ProjectionArgs,
    /// `paper`, `reduced`, or a grid TOML file.
    #[arg(long, default_value = "paper")]
    pub grid: String,
    #[arg(long, default_value_t = 5)]
    pub runs: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = DEFAULT_DIM)]
    pub dim: usize,
    /// Precomputed part vectors instead of the built-in embedding.
    #[arg(long)]
    pub vectors: Option<PathBuf>,
    #[command(flatten)]
    pub split: SplitArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct RunArgs {
    #[command(flatten)]
    pub pipeline: PipelineArgs,
    /// Also run the document-clustering and direct baselines and print them.
    #[arg(long)]
    pub compare: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct SweepBetaArgs {
    #[command(flatten)]
    pub pipeline: PipelineArgs,
    /// Run index whose model supplies the high clusters.
    #[arg(long, default_value_t = 1)]
    pub run: usize,
    #[arg(long, value_delimiter = ',', default_value = "0,0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9,1")]
    pub betas: Vec<f64>,
    #[arg(long)]
    pub out: PathBuf,
}

/// Predictions as written by `predict` and read by `evaluate`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionFile {
    pub n_high_clusters: usize,
    pub threshold: usize,
    pub high_clusters: Vec<ClusterRef>,
    pub predictions: Vec<DocumentPrediction>,
}

/// What a command touched, for its manifest.
struct Outcome {
    config: serde_json::Value,
    seeds: BTreeMap<String, u64>,
    inputs: Vec<PathBuf>,
    outputs: Vec<PathBuf>,
}

/// Parses `argv` (program name first), runs the command, and returns the
/// process exit code.
pub fn dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            let msg = e.to_string().replace('\n', " ");
            eprintln!("error[{}]: {msg}", e.category());
            1
        }
    }
}

pub fn execute(cli: &Cli) -> Result<()> {
    let root = cli.artifacts.as_deref();
    let at = |p: &Path| resolve(root, p);
    let started = unix_now();
    let (name, primary, outcome) = match &cli.command {
        Command::Gen(a) => ("gen", at(&a.out), gen(a, &at)?),
        Command::Segment(a) => ("segment", at(&a.out), segment(a, &at)?),
        Command::Embed(a) => ("embed", at(&a.out), embed(a, &at)?),
        Command::Cluster(a) => ("cluster", at(&a.out), cluster(a, &at)?),
        Command::Featurize(a) => ("featurize", at(&a.out), featurize(a, &at)?),
        Command::Train(a) => ("train", at(&a.out), train(a, &at)?),
        Command::Predict(a) => ("predict", at(&a.out), predict(a, &at)?),
        Command::Evaluate(a) => ("evaluate", at(&a.out), evaluate(a, &at)?),
        Command::Run(a) => ("run", at(&a.out), run(a, &at)?),
        Command::SweepBeta(a) => ("sweep-beta", at(&a.out), sweep(a, &at)?),
    };
    let m = RunManifest {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        command: name.to_string(),
        config: outcome.config,
        seeds: outcome.seeds,
        inputs: hash_all(&outcome.inputs)?,
        outputs: hash_all(&outcome.outputs)?,
        started_unix: started,
        finished_unix: unix_now(),
    };
    let path = manifest_path(&primary);
    m.write(&path)?;
    log::info!("wrote {}", path.display());
    Ok(())
}

fn resolve(root: Option<&Path>, p: &Path) -> PathBuf {
    match root {
        Some(r) if p.is_relative() => r.join(p),
        _ => p.to_path_buf(),
    }
}

/// Checks sibling manifests of all inputs before anything is read.
fn check_inputs(paths: &[&Path]) -> Result<()> {
    paths.iter().try_for_each(|p| verify_sibling(p))
}

fn ensure_parent(path: &Path) -> Result<()> {
    match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => fs::create_dir_all(d).map_err(|e| Error::io(d, e)),
        _ => Ok(()),
    }
}

fn seeds(pairs: &[(&str, u64)]) -> BTreeMap<String, u64> {
    pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

/// Reads a corpus and, if it has no test documents, splits it.
fn load_corpus(path: &Path, split: &SplitArgs) -> Result<Corpus> {
    let corpus = ingest_corpus(path, CorpusFormat::JsonLines)?;
    if corpus.in_split(Split::Test).next().is_some() {
        return Ok(corpus);
    }
    log::info!(
        "{}: no test documents, splitting {:.2}/{:.2} with seed {}",
        path.display(),
        split.train_fraction,
        1.0 - split.train_fraction,
        split.split_seed
    );
    split_corpus(&corpus, split.train_fraction, split.split_seed)
}

fn load_grid(spec: &str, at: &dyn Fn(&Path) -> PathBuf) -> Result<(ExperimentGrid, Option<PathBuf>)> {
    match spec {
        "paper" => Ok((ExperimentGrid::paper_default(0), None)),
        "reduced" => Ok((ExperimentGrid::reduced(0), None)),
        file => {
            let p = at(Path::new(file));
            Ok((ExperimentGrid::load(&p)?, Some(p)))
        }
    }
}

fn gen(a: &GenArgs, at: &dyn Fn(&Path) -> PathBuf) -> Result<Outcome> {
    let config_path = a.config.as_deref().map(at);
    let mut cfg = match &config_path {
        Some(p) => SynthConfig::load(p)?,
        None => SynthConfig::default(),
    };
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    if let Some(n) = a.n_docs {
        cfg.n_docs = n;
    }
    let synth = generate(&cfg)?;
    let out = at(&a.out);
    let gold = at(&a.gold);
    ensure_parent(&out)?;
    ensure_parent(&gold)?;
    synth.corpus.write_jsonl(&out)?;
    Gold::from_corpus(&synth.corpus, Split::Test).write_csv(&gold)?;
    let mut outputs = vec![out, gold];
    if let Some(s) = &a.spans {
        let s = at(s);
        ensure_parent(&s)?;
        write_spans_jsonl(&emit_verb_trigram_spans(&synth.corpus), &s)?;
        outputs.push(s);
    }
    Ok(Outcome {
        config: serde_json::to_value(&cfg)?,
        seeds: seeds(&[("synth", cfg.seed)]),
        inputs: config_path.into_iter().collect(),
        outputs,
    })
}

fn segment(a: &SegmentArgs, at: &dyn Fn(&Path) -> PathBuf) -> Result<Outcome> {
    let corpus_path = at(&a.corpus);
    let spans = a.spans.as_deref().map(at);
    check_inputs(&[&corpus_path])?;
    let corpus = ingest_corpus(&corpus_path, CorpusFormat::JsonLines)?;
    let parts = segment_corpus(&corpus, a.granularity.into(), spans.as_deref())?;
    let out = at(&a.out);
    ensure_parent(&out)?;
    write_parts_jsonl(&parts, &out)?;
    log::info!("{} documents -> {} parts", corpus.len(), parts.len());
    Ok(Outcome {
        config: serde_json::to_value(a)?,
        seeds: BTreeMap::new(),
        inputs: std::iter::once(corpus_path).chain(spans).collect(),
        outputs: vec![out],
    })
}

fn embed(a: &EmbedArgs, at: &dyn Fn(&Path) -> PathBuf) -> Result<Outcome> {
    let parts_path = at(&a.parts);
    check_inputs(&[&parts_path])?;
    let vectors = a.vectors.as_deref().map(at);
    let backend = match (a.backend, &vectors) {
        (EmbedBackendArg::Hash, _) => EmbeddingBackend::BuiltinHash,
        (EmbedBackendArg::File, Some(v)) => EmbeddingBackend::ExternalFile(v.clone()),
        (EmbedBackendArg::File, None) => return Err(Error::Config("--backend file needs --vectors".into())),
    };
    let parts = read_parts_jsonl(&parts_path)?;
    let m = embed_parts(&parts, &backend, a.dim, a.seed)?;
    let out = at(&a.out);
    ensure_parent(&out)?;
    m.write_jsonl(&out)?;
    Ok(Outcome {
        config: serde_json::to_value(a)?,
        seeds: seeds(&[("embed", a.seed)]),
        inputs: std::iter::once(parts_path).chain(vectors).collect(),
        outputs: vec![out],
    })
}

fn cluster(a: &ClusterArgs, at: &dyn Fn(&Path) -> PathBuf) -> Result<Outcome> {
    let emb_path = at(&a.embeddings);
    check_inputs(&[&emb_path])?;
    let (mut grid, grid_path) = load_grid(&a.grid, at)?;
    if let Some(s) = a.seed {
        grid.base_seed = s;
    }
    let m = EmbeddingMatrix::read_jsonl(&emb_path)?;
    let sets = run_grid(&m, &grid)?;
    let out = at(&a.out);
    fs::create_dir_all(&out).map_err(|e| Error::io(&out, e))?;
    write_cluster_sets(&sets, &out)?;
    log::info!("{} experiments written to {}", sets.len(), out.display());
    Ok(Outcome {
        config: json!({ "grid": grid, "embeddings": emb_path }),
        seeds: seeds(&[("grid", grid.base_seed)]),
        inputs: std::iter::once(emb_path).chain(grid_path).collect(),
        outputs: vec![out],
    })
}

const LABEL_HEADER: [&str; 5] = ["experiment_id", "cluster_id", "alpha", "campaign_fraction", "label"];

fn write_labels_csv(labels: &[LabeledCluster], path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::Writer::from_writer(file);
    w.write_record(LABEL_HEADER)?;
    for l in labels {
        w.write_record([
            l.cluster.experiment_id.clone(),
            l.cluster.cluster_id.to_string(),
            l.alpha.to_string(),
            l.campaign_fraction.to_string(),
            l.label.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn read_labels_csv(path: &Path) -> Result<HashMap<(String, usize), bool>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = csv::Reader::from_reader(file);
    let mut out = HashMap::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let bad = |m: String| Error::Parse {
            path: path.to_path_buf(),
            line: i + 2,
            message: m,
        };
        if rec.len() != LABEL_HEADER.len() {
            return Err(bad(format!("expected {} columns", LABEL_HEADER.len())));
        }
        let id: usize = rec[1].parse().map_err(|e| bad(format!("cluster_id: {e}")))?;
        let label: bool = rec[4].parse().map_err(|e| bad(format!("label: {e}")))?;
        out.insert((rec[0].to_string(), id), label);
    }
    Ok(out)
}

fn featurize(a: &FeaturizeArgs, at: &dyn Fn(&Path) -> PathBuf) -> Result<Outcome> {
    let clusters = at(&a.clusters);
    let emb_path = at(&a.embeddings);
    let parts_path = at(&a.parts);
    check_inputs(&[&clusters, &emb_path, &parts_path])?;
    let sets = read_cluster_sets(&clusters)?;
    let m = EmbeddingMatrix::read_jsonl(&emb_path)?;
    let parts = read_parts_jsonl(&parts_path)?;
    let ctx = FeatureContext::new(&m, &parts);
    let rows = featurize_sets(&sets, &ctx)?;
    let out = at(&a.out);
    ensure_parent(&out)?;
    write_features_csv(&rows, &out)?;
    let mut inputs = vec![clusters, emb_path, parts_path];
    let mut outputs = vec![out];
    if let (Some(c), Some(tf), Some(lb)) = (&a.corpus, &a.train_features, &a.labels) {
        let corpus_path = at(c);
        check_inputs(&[&corpus_path])?;
        let corpus = load_corpus(&corpus_path, &a.split)?;
        let (examples, labels) = training_examples(&corpus, &parts, &ctx, &sets, a.alpha)?;
        let train_rows: Vec<FeatureRow> = examples
            .into_iter()
            .zip(&labels)
            .map(|(e, l)| FeatureRow {
                experiment_id: l.cluster.experiment_id.clone(),
                cluster_id: l.cluster.cluster_id,
                values: e.features,
            })
            .collect();
        let (tf, lb) = (at(tf), at(lb));
        ensure_parent(&tf)?;
        ensure_parent(&lb)?;
        write_features_csv(&train_rows, &tf)?;
        write_labels_csv(&labels, &lb)?;
        log::info!(
            "{} training clusters, {} positive at alpha {}",
            labels.len(),
            labels.iter().filter(|l| l.label).count(),
            a.alpha
        );
        inputs.push(corpus_path);
        outputs.extend([tf, lb]);
    }
    Ok(Outcome {
        config: serde_json::to_value(a)?,
        seeds: BTreeMap::new(),
        inputs,
        outputs,
    })
}

fn train(a: &TrainArgs, at: &dyn Fn(&Path) -> PathBuf) -> Result<Outcome> {
    let fpath = at(&a.features);
    let lpath = at(&a.labels);
    check_inputs(&[&fpath, &lpath])?;
    let rows = read_features_csv(&fpath)?;
    let labels = read_labels_csv(&lpath)?;
    let examples: Vec<TrainingExample> = rows
        .into_iter()
        .map(|r| {
            let key = (r.experiment_id, r.cluster_id);
            let label = labels.get(&key).copied().ok_or_else(|| {
                Error::UnknownReference(format!("no label for cluster {}/{}", key.0, key.1))
            })?;
            Ok(TrainingExample::new(r.values, label))
        })
        .collect::<Result<_>>()?;
    let model = train_for_run(a.backend.into(), &examples, a.run, a.seed)?;
    let out = at(&a.out);
    ensure_parent(&out)?;
    model.save(&out, &feature_names())?;
    Ok(Outcome {
        config: serde_json::to_value(a)?,
        seeds: seeds(&[("train", a.seed)]),
        inputs: vec![fpath, lpath],
        outputs: vec![out],
    })
}

fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    ensure_parent(path)?;
    let s = serde_json::to_string_pretty(value)?;
    fs::write(path, s + "\n").map_err(|e| Error::io(path, e))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let s = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&s).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        line: e.line(),
        message: e.to_string(),
    })
}

fn predict(a: &PredictArgs, at: &dyn Fn(&Path) -> PathBuf) -> Result<Outcome> {
    let (mpath, fpath, cpath, ppath, corpus_path) =
        (at(&a.model), at(&a.features), at(&a.clusters), at(&a.parts), at(&a.corpus));
    check_inputs(&[&mpath, &fpath, &cpath, &ppath, &corpus_path])?;
    let (model, names) = Model::load(&mpath)?;
    if names != feature_names() {
        return Err(Error::Config(format!(
            "{}: model was trained on a different feature set",
            mpath.display()
        )));
    }
    let rows = read_features_csv(&fpath)?;
    let high = predict_high_influence_clusters(&model, &rows)?;
    let sets = read_cluster_sets(&cpath)?;
    let index: HashMap<(&str, usize), &Cluster> = sets
        .iter()
        .flat_map(|s| &s.clusters)
        .map(|c| ((c.experiment_id.as_str(), c.cluster_id), c))
        .collect();
    let high_clusters: Vec<&Cluster> = high
        .iter()
        .map(|r| {
            index.get(&(r.experiment_id.as_str(), r.cluster_id)).copied().ok_or_else(|| {
                Error::UnknownReference(format!("cluster {}/{} is not in {}", r.experiment_id, r.cluster_id, cpath.display()))
            })
        })
        .collect::<Result<_>>()?;
    let corpus = load_corpus(&corpus_path, &a.split)?;
    let parts = read_parts_jsonl(&ppath)?;
    let test_parts = parts_in_split(&corpus, &parts, Split::Test);
    let projection = a.projection.config();
    let predictions = project_documents(&high_clusters, &test_parts, &projection);
    let file = PredictionFile {
        n_high_clusters: high.len(),
        threshold: projection.threshold(high.len()),
        high_clusters: high,
        predictions,
    };
    let out = at(&a.out);
    write_json(&file, &out)?;
    log::info!(
        "{} high clusters, threshold {}, {} documents flagged",
        file.n_high_clusters,
        file.threshold,
        file.predictions.iter().filter(|p| p.predicted).count()
    );
    Ok(Outcome {
        config: serde_json::to_value(a)?,
        seeds: BTreeMap::new(),
        inputs: vec![mpath, fpath, cpath, ppath, corpus_path],
        outputs: vec![out],
    })
}

fn evaluate(a: &EvaluateArgs, at: &dyn Fn(&Path) -> PathBuf) -> Result<Outcome> {
    let (ppath, gpath) = (at(&a.predictions), at(&a.gold));
    check_inputs(&[&ppath, &gpath])?;
    let preds: PredictionFile = read_json(&ppath)?;
    let gold = Gold::read_csv(&gpath)?;
    let m = score(&preds.predictions, &gold)?;
    println!(
        "precision {:.4}  recall {:.4}  f1 {:.4}  (tp {} fp {} fn {} tn {})",
        m.precision, m.recall, m.f1, m.tp, m.fp, m.fn_, m.tn
    );
    for (media, e) in &m.per_media {
        println!("  {:<8} fn {:>4}  fp {:>4}  of {}", media.name(), e.fn_, e.fp, e.total);
    }
    let out = at(&a.out);
    write_json(&m, &out)?;
    Ok(Outcome {
        config: serde_json::to_value(a)?,
        seeds: BTreeMap::new(),
        inputs: vec![ppath, gpath],
        outputs: vec![out],
    })
}

/// Pipeline config plus the resolved input paths it depends on.
fn pipeline_config(p: &PipelineArgs, at: &dyn Fn(&Path) -> PathBuf) -> Result<(PipelineConfig, Vec<PathBuf>)> {
    let corpus = at(&p.corpus);
    let (grid, grid_path) = load_grid(&p.grid, at)?;
    let mut cfg = PipelineConfig::new(p.granularity.into(), grid);
    cfg.spans = p.spans.as_deref().map(at);
    cfg.backend = p.backend.into();
    cfg.alpha = p.alpha;
    cfg.projection = p.projection.config();
    cfg.embed = EmbedConfig {
        dim: p.dim,
        vectors: p.vectors.as_deref().map(at),
    };
    cfg.runs = p.runs;
    cfg.seed = p.seed;
    let inputs = std::iter::once(corpus)
        .chain(grid_path)
        .chain(cfg.spans.clone())
        .chain(cfg.embed.vectors.clone())
        .collect();
    Ok((cfg, inputs))
}

fn run(a: &RunArgs, at: &dyn Fn(&Path) -> PathBuf) -> Result<Outcome> {
    let (cfg, inputs) = pipeline_config(&a.pipeline, at)?;
    let refs: Vec<&Path> = inputs.iter().map(PathBuf::as_path).collect();
    check_inputs(&refs)?;
    let corpus = load_corpus(&inputs[0], &a.pipeline.split)?;
    if cfg.runs == 0 {
        return Err(Error::invalid("--runs must be at least 1"));
    }
    let data = prepare(&corpus, &cfg)?;
    let report = report_from_prepared(&corpus, &cfg, &data)?;
    let out = at(&a.out);
    write_json(&report, &out)?;

    let mut rows: Vec<(String, AggregateReport)> = vec![(report.method.clone(), report.summary.clone())];
    if a.compare {
        if cfg.granularity != Granularity::WholeDoc {
            let doc = pipeline::run_document_level_clustering_baseline(&corpus, &cfg)?;
            rows.push((doc.method, doc.summary));
        }
        let (_, direct) = pipeline::direct_baseline_report(&corpus, cfg.backend, cfg.runs, cfg.seed)?;
        rows.push(("direct-document".into(), direct));
    }
    print!("{}", format_performance_table(&rows));
    println!();
    print!("{}", format_error_table(&rows));

    Ok(Outcome {
        config: json!({ "pipeline": cfg, "compare": a.compare, "split": a.pipeline.split }),
        seeds: seeds(&[("pipeline", cfg.seed), ("split", a.pipeline.split.split_seed)]),
        inputs,
        outputs: vec![out],
    })
}

fn sweep(a: &SweepBetaArgs, at: &dyn Fn(&Path) -> PathBuf) -> Result<Outcome> {
    let (cfg, inputs) = pipeline_config(&a.pipeline, at)?;
    let refs: Vec<&Path> = inputs.iter().map(PathBuf::as_path).collect();
    check_inputs(&refs)?;
    let corpus = load_corpus(&inputs[0], &a.pipeline.split)?;
    let mut betas = a.betas.clone();
    betas.sort_by(f64::total_cmp);
    let data = prepare(&corpus, &cfg)?;
    let model = train_for_run(cfg.backend, &data.train_examples, a.run, cfg.seed)?;
    let high = predict_high_influence_clusters(&model, &data.inference_rows)?;
    let high_clusters: Vec<&Cluster> = high.iter().filter_map(|r| data.cluster(r)).collect();
    let rows = sweep_beta(&high_clusters, &data.test_parts, &data.gold, &betas, &cfg.projection)?;
    let out = at(&a.out);
    ensure_parent(&out)?;
    write_beta_csv(&rows, &out)?;
    println!("{:>5}  {:>9}  {:>9}  {:>9}  {:>9}", "beta", "threshold", "precision", "recall", "f1");
    for r in &rows {
        println!(
            "{:>5.2}  {:>9}  {:>9.4}  {:>9.4}  {:>9.4}",
            r.beta, r.threshold, r.precision, r.recall, r.f1
        );
    }
    Ok(Outcome {
        config: json!({ "pipeline": cfg, "run": a.run, "betas": betas, "split": a.pipeline.split }),
        seeds: seeds(&[("pipeline", cfg.seed), ("split", a.pipeline.split.split_seed)]),
        inputs,
        outputs: vec![out],
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relative_paths_follow_the_artifact_root() {
        let root = Path::new("/data/run1");
        assert_eq!(resolve(Some(root), Path::new("parts.jsonl")), root.join("parts.jsonl"));
        assert_eq!(resolve(Some(root), Path::new("/tmp/x")), PathBuf::from("/tmp/x"));
        assert_eq!(resolve(None, Path::new("x")), PathBuf::from("x"));
    }

    #[test]
    fn usage_errors_exit_2_and_help_exits_0() {
        assert_eq!(dispatch(["campaign-detect", "run", "--help"]), 0);
        assert_eq!(dispatch(["campaign-detect", "run", "--no-such-flag"]), 2);
        assert_eq!(dispatch(["campaign-detect", "frobnicate"]), 2);
        assert_eq!(dispatch(["campaign-detect", "run", "--corpus", "c", "--out", "o", "--beta", "abc"]), 2);
    }

    #[test]
    fn featurize_training_outputs_come_together() {
        let r = Cli::try_parse_from([
            "campaign-detect", "featurize", "--clusters", "c", "--embeddings", "e", "--parts", "p", "--out", "f",
            "--corpus", "x",
        ]);
        assert!(r.is_err());
    }
}
