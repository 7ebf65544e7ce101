//! Precision, recall and F1 on the campaign class, per-media error counts,
//! run aggregation, and beta sweeps.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::fs::File;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::cluster::Cluster;
use crate::corpus::{Corpus, Media, Part, Split};
use crate::error::{Error, Result};
use crate::pipeline::{project_documents, DocumentPrediction, ProjectionConfig};

/// Gold labels and media of the documents being evaluated.
#[derive(Debug, Clone, Default)]
pub struct Gold {
    docs: BTreeMap<String, (bool, Media)>,
}

impl Gold {
    pub fn new(entries: impl IntoIterator<Item = (String, bool, Media)>) -> Self {
        Gold {
            docs: entries.into_iter().map(|(id, l, m)| (id, (l, m))).collect(),
        }
    }

    /// Documents of one split.
    pub fn from_corpus(corpus: &Corpus, split: Split) -> Self {
        Self::new(corpus.in_split(split).map(|d| (d.doc_id.clone(), d.label, d.media)))
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    pub fn contains(&self, doc_id: &str) -> bool {
        self.docs.contains_key(doc_id)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, bool, Media)> {
        self.docs.iter().map(|(id, &(l, m))| (id.as_str(), l, m))
    }

    /// Writes `doc_id,label,media` rows.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = csv::Writer::from_writer(file);
        w.write_record(["doc_id", "label", "media"])?;
        for (id, l, m) in self.iter() {
            w.write_record([id, if l { "true" } else { "false" }, m.name()])?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut r = csv::Reader::from_reader(file);
        let mut docs = BTreeMap::new();
        for (i, rec) in r.records().enumerate() {
            let rec = rec?;
            let bad = |m: String| Error::Parse {
                path: path.to_path_buf(),
                line: i + 2,
                message: m,
            };
            if rec.len() < 3 {
                return Err(bad("expected doc_id,label,media".into()));
            }
            let label = rec[1].parse::<bool>().map_err(|e| bad(format!("label: {e}")))?;
            let media = serde_json::from_value(serde_json::Value::String(rec[2].to_string()))
                .map_err(|e| bad(format!("media: {e}")))?;
            docs.insert(rec[0].to_string(), (label, media));
        }
        Ok(Gold { docs })
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MediaErrors {
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub fp: usize,
    pub positives: usize,
    pub total: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub tn: usize,
    pub per_media: BTreeMap<Media, MediaErrors>,
}

pub fn prf(tp: usize, fp: usize, fn_: usize) -> (f64, f64, f64) {
    let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
    let p = ratio(tp, tp + fp);
    let r = ratio(tp, tp + fn_);
    let f = if p + r > 0.0 { 2.0 * p * r / (p + r) } else { 0.0 };
    (p, r, f)
}

/// Scores predictions against gold. Gold documents without a prediction
/// count as negative; predictions for unknown documents are an error.
pub fn score(predictions: &[DocumentPrediction], gold: &Gold) -> Result<MetricsReport> {
    let mut predicted: HashMap<&str, bool> = HashMap::new();
    for p in predictions {
        if !gold.contains(&p.doc_id) {
            return Err(Error::UnknownReference(format!("prediction for unknown doc_id {}", p.doc_id)));
        }
        let e = predicted.entry(p.doc_id.as_str()).or_insert(false);
        *e |= p.predicted;
    }
    let (mut tp, mut fp, mut fn_, mut tn) = (0, 0, 0, 0);
    let mut per_media: BTreeMap<Media, MediaErrors> = BTreeMap::new();
    for (id, label, media) in gold.iter() {
        let yhat = predicted.get(id).copied().unwrap_or(false);
        let m = per_media.entry(media).or_default();
        m.total += 1;
        m.positives += usize::from(label);
        match (yhat, label) {
            (true, true) => tp += 1,
            (true, false) => {
                fp += 1;
                m.fp += 1;
            }
            (false, true) => {
                fn_ += 1;
                m.fn_ += 1;
            }
            (false, false) => tn += 1,
        }
    }
    let (precision, recall, f1) = prf(tp, fp, fn_);
    Ok(MetricsReport {
        precision,
        recall,
        f1,
        tp,
        fp,
        fn_,
        tn,
        per_media,
    })
}

/// Mean and population standard deviation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    pub std: f64,
}

impl Stat {
    pub fn of(values: &[f64]) -> Stat {
        if values.is_empty() {
            return Stat { mean: 0.0, std: 0.0 };
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        Stat { mean, std: var.sqrt() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MediaStats {
    #[serde(rename = "fn")]
    pub fn_: Stat,
    pub fp: Stat,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateReport {
    pub n_runs: usize,
    pub precision: Stat,
    pub recall: Stat,
    pub f1: Stat,
    pub per_media: BTreeMap<Media, MediaStats>,
}

pub fn aggregate_runs(reports: &[MetricsReport]) -> Result<AggregateReport> {
    if reports.is_empty() {
        return Err(Error::invalid("no run reports to aggregate"));
    }
    let col = |f: &dyn Fn(&MetricsReport) -> f64| Stat::of(&reports.iter().map(f).collect::<Vec<_>>());
    let mut media: Vec<Media> = reports.iter().flat_map(|r| r.per_media.keys().copied()).collect();
    media.sort();
    media.dedup();
    let per_media = media
        .into_iter()
        .map(|m| {
            let get = |r: &MetricsReport| r.per_media.get(&m).copied().unwrap_or_default();
            (
                m,
                MediaStats {
                    fn_: col(&|r| get(r).fn_ as f64),
                    fp: col(&|r| get(r).fp as f64),
                },
            )
        })
        .collect();
    Ok(AggregateReport {
        n_runs: reports.len(),
        precision: col(&|r| r.precision),
        recall: col(&|r| r.recall),
        f1: col(&|r| r.f1),
        per_media,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BetaRow {
    pub beta: f64,
    pub threshold: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// One row per beta, projecting the same high clusters with aggregation on.
pub fn sweep_beta(
    high_clusters: &[&Cluster],
    parts: &[Part],
    gold: &Gold,
    betas: &[f64],
    base: &ProjectionConfig,
) -> Result<Vec<BetaRow>> {
    if betas.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::invalid("betas must be sorted ascending"));
    }
    betas
        .iter()
        .map(|&beta| {
            let cfg = ProjectionConfig {
                beta,
                aggregation: true,
                ..*base
            };
            let preds = project_documents(high_clusters, parts, &cfg);
            let m = score(&preds, gold)?;
            Ok(BetaRow {
                beta,
                threshold: cfg.threshold(high_clusters.len()),
                precision: m.precision,
                recall: m.recall,
                f1: m.f1,
            })
        })
        .collect()
}

pub fn write_beta_csv(rows: &[BetaRow], path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::Writer::from_writer(file);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Plain-text table of mean +- std precision, recall and F1 per method.
pub fn format_performance_table(rows: &[(String, AggregateReport)]) -> String {
    let width = rows.iter().map(|(n, _)| n.len()).max().unwrap_or(0).max(6);
    let mut s = String::new();
    let _ = writeln!(s, "{:<width$}  {:>13}  {:>13}  {:>13}", "Method", "Precision", "Recall", "F1");
    for (name, a) in rows {
        let cell = |st: Stat| format!("{:.3} ± {:.3}", st.mean, st.std);
        let _ = writeln!(
            s,
            "{:<width$}  {:>13}  {:>13}  {:>13}",
            name,
            cell(a.precision),
            cell(a.recall),
            cell(a.f1)
        );
    }
    s
}

/// Plain-text table of mean false negatives and false positives per media.
pub fn format_error_table(rows: &[(String, AggregateReport)]) -> String {
    let mut s = String::new();
    let width = rows.iter().map(|(n, _)| n.len()).max().unwrap_or(0).max(6);
    let _ = write!(s, "{:<width$}", "Method");
    for m in Media::ALL {
        let _ = write!(s, "  {:>8} {:>8}", format!("{} FN", m.name()), "FP");
    }
    s.push('\n');
    for (name, a) in rows {
        let _ = write!(s, "{name:<width$}");
        for m in Media::ALL {
            let st = a.per_media.get(&m);
            let (f, p) = st.map_or((0.0, 0.0), |st| (st.fn_.mean, st.fp.mean));
            let _ = write!(s, "  {f:>8.1} {p:>8.1}");
        }
        s.push('\n');
    }
    s
}
