//! End-to-end orchestration. Every stage reads the previous stage's files
//! and writes its own, so stages can be re-run one at a time.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::{self, FilterRules};
use crate::error::{Error, Result};
use crate::hashgraph::{self, HashtagGraph, ModularityParams, Partition};
use crate::labeler::{self, CommunityLookup, ConstraintMatrix};
use crate::report;
use crate::tsnmf::{self, Factorization, SolverConfig};
use crate::vectorizer::{self, MatrixKind, Vocabulary};

pub const DOCUMENTS: &str = "documents.jsonl";
pub const GRAPH: &str = "graph.tsv";
pub const GRAPH_NODES: &str = "graph_nodes.txt";
pub const PARTITION: &str = "partition.tsv";
pub const LOOKUP: &str = "lookup.tsv";
pub const LABELED: &str = "labeled.jsonl";
pub const CONSTRAINT: &str = "constraint.coo";
pub const VOCABULARY: &str = "vocabulary.tsv";
pub const TFIDF: &str = "tfidf.coo";
pub const SUPERVISED: &str = "supervised";
pub const UNSUPERVISED: &str = "unsupervised";
pub const W_FILE: &str = "W.coo";
pub const H_FILE: &str = "H.coo";
pub const FIT_SUMMARY: &str = "fit.json";
pub const TOPICS_SUPERVISED: &str = "topics_supervised.json";
pub const TOPICS_UNSUPERVISED: &str = "topics_unsupervised.json";
pub const COMPARISON: &str = "comparison.json";
pub const MANIFEST: &str = "manifest.json";

/// Every file a full run leaves in the output directory, in stage order.
pub const ARTIFACTS: [&str; 19] = [
    DOCUMENTS,
    GRAPH,
    GRAPH_NODES,
    PARTITION,
    LOOKUP,
    LABELED,
    CONSTRAINT,
    VOCABULARY,
    TFIDF,
    "supervised/W.coo",
    "supervised/H.coo",
    "supervised/fit.json",
    "unsupervised/W.coo",
    "unsupervised/H.coo",
    "unsupervised/fit.json",
    TOPICS_SUPERVISED,
    TOPICS_UNSUPERVISED,
    COMPARISON,
    MANIFEST,
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub input_path: Option<PathBuf>,
    #[serde(skip_serializing)]
    pub output_dir: Option<PathBuf>,
    pub min_chars: usize,
    pub drop_retweets: bool,
    pub drop_replies: bool,
    pub min_df: usize,
    pub tau: u64,
    pub resolution: f64,
    pub num_communities: usize,
    pub k: usize,
    pub target_labeled_ratio: f64,
    pub max_iter: usize,
    pub tol: f64,
    pub epsilon: f64,
    pub top_n: usize,
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            input_path: None,
            output_dir: None,
            min_chars: 160,
            drop_retweets: true,
            drop_replies: true,
            min_df: 5,
            tau: 2,
            resolution: 0.3,
            num_communities: 70,
            k: 80,
            target_labeled_ratio: 0.5,
            max_iter: 200,
            tol: 1e-4,
            epsilon: 1e-12,
            top_n: 20,
            seed: 42,
        }
    }
}

impl PipelineConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        PipelineConfig::from_json(&fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
    }

    pub fn filter_rules(&self) -> FilterRules {
        FilterRules {
            min_chars: self.min_chars,
            drop_retweets: self.drop_retweets,
            drop_replies: self.drop_replies,
        }
    }

    pub fn solver(&self) -> SolverConfig {
        SolverConfig {
            k: self.k,
            max_iter: self.max_iter,
            tol: self.tol,
            epsilon: self.epsilon,
            seed: self.seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_communities > self.k {
            return Err(Error::Config(format!(
                "num_communities ({}) must not exceed k ({})",
                self.num_communities, self.k
            )));
        }
        if self.min_chars == 0 {
            return Err(Error::Config("min_chars must be positive".into()));
        }
        if self.min_df == 0 || self.tau == 0 || self.num_communities == 0 || self.top_n == 0 {
            return Err(Error::Config("min_df, tau, num_communities and top_n must be positive".into()));
        }
        if !(self.target_labeled_ratio > 0.0 && self.target_labeled_ratio <= 1.0) {
            return Err(Error::Config(format!(
                "target_labeled_ratio must be in (0, 1], got {}",
                self.target_labeled_ratio
            )));
        }
        ModularityParams::new(self.resolution)?;
        self.solver().validate()
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn write(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("artifact serializes") + "\n"
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IngestStats {
    pub raw_documents: usize,
    pub kept_documents: usize,
}

/// `documents.jsonl` from a raw corpus.
pub fn ingest(input: &Path, rules: &FilterRules, out_dir: &Path) -> Result<IngestStats> {
    let raw = corpus::read_raw(input)?;
    let docs: Vec<_> = raw
        .iter()
        .filter(|r| rules.accepts(r))
        .map(|r| corpus::Document::from_text(r.id.clone(), &r.text))
        .collect();
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    corpus::write_documents(out_dir.join(DOCUMENTS), &docs)?;
    Ok(IngestStats {
        raw_documents: raw.len(),
        kept_documents: docs.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GraphStats {
    pub hashtags: usize,
    pub edges: usize,
}

/// `graph.tsv` and `graph_nodes.txt` from ingested documents.
pub fn graph(documents: &Path, tau: u64, out_dir: &Path) -> Result<GraphStats> {
    let docs = corpus::read_documents(documents)?;
    let g = hashgraph::build_graph(&docs, tau);
    write(&out_dir.join(GRAPH), &g.to_tsv())?;
    write(&out_dir.join(GRAPH_NODES), &g.nodes_to_text())?;
    Ok(GraphStats {
        hashtags: g.node_count(),
        edges: g.edge_count(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommunityStats {
    pub communities: usize,
    pub modularity: f64,
    pub largest_sizes: Vec<usize>,
}

/// `partition.tsv` from the graph files.
pub fn communities(graph_tsv: &Path, nodes: &Path, resolution: f64, seed: u64, out_dir: &Path) -> Result<CommunityStats> {
    let g = HashtagGraph::from_tsv(&read(graph_tsv)?, &read(nodes)?, 1)?;
    let params = ModularityParams::new(resolution)?;
    let partition = if g.node_count() == 0 {
        Partition::from_groups(Vec::<(String, usize)>::new())
    } else {
        hashgraph::louvain(&g, &params, seed)
    };
    write(&out_dir.join(PARTITION), &partition.to_tsv())?;
    Ok(CommunityStats {
        communities: partition.num_communities(),
        modularity: hashgraph::modularity(&g, &partition, &params)?,
        largest_sizes: partition.sizes().iter().take(10).copied().collect(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabelStats {
    pub selected_communities: usize,
    pub labeled_fraction_before: f64,
    pub documents_before: usize,
    pub labeled_fraction_after: f64,
    pub documents_after: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct LabelSettings {
    pub num_communities: usize,
    pub k: usize,
    pub target_labeled_ratio: f64,
    pub seed: u64,
}

/// `lookup.tsv`, `labeled.jsonl` (labeled and down-sampled) and
/// `constraint.coo`.
pub fn label(documents: &Path, partition: &Path, settings: &LabelSettings, out_dir: &Path) -> Result<LabelStats> {
    let docs = corpus::read_documents(documents)?;
    let partition = Partition::from_tsv(&read(partition)?)?;
    let lookup = CommunityLookup::from_partition(&partition, settings.num_communities);
    let labeled = labeler::label_documents(&docs, &lookup);
    let before = labeler::labeled_fraction(&labeled);
    let kept = labeler::downsample_unlabeled(&labeled, settings.target_labeled_ratio, settings.seed)?;
    let constraint = labeler::build_constraint_matrix(&kept, settings.k)?;
    write(&out_dir.join(LOOKUP), &lookup.to_tsv())?;
    corpus::write_documents(out_dir.join(LABELED), &kept)?;
    write(&out_dir.join(CONSTRAINT), &constraint.to_coordinate())?;
    Ok(LabelStats {
        selected_communities: hashgraph::top_communities(&partition, settings.num_communities).len(),
        labeled_fraction_before: before,
        documents_before: labeled.len(),
        labeled_fraction_after: labeler::labeled_fraction(&kept),
        documents_after: kept.len(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitStats {
    pub vocabulary_size: usize,
    pub nonzeros: usize,
    pub supervised_objective: f64,
    pub supervised_iterations: usize,
    pub unsupervised_objective: f64,
    pub unsupervised_iterations: usize,
}

fn write_factorization(dir: &Path, fit: &Factorization) -> Result<()> {
    write(&dir.join(W_FILE), &tsnmf::dense_to_coordinate(&fit.w))?;
    write(&dir.join(H_FILE), &tsnmf::dense_to_coordinate(&fit.h))?;
    write(&dir.join(FIT_SUMMARY), &fit.summary_json())
}

pub fn read_factorization(dir: &Path) -> Result<Factorization> {
    Factorization::from_parts(
        &read(&dir.join(W_FILE))?,
        &read(&dir.join(H_FILE))?,
        &read(&dir.join(FIT_SUMMARY))?,
    )
}

/// Vectorizes the labeled documents and fits twice from the same seed: once
/// with the constraint matrix and once with an all-ones mask.
pub fn fit(labeled: &Path, constraint: &Path, min_df: usize, solver: &SolverConfig, out_dir: &Path) -> Result<FitStats> {
    let docs = corpus::read_documents(labeled)?;
    let mask = ConstraintMatrix::from_coordinate(&read(constraint)?)?;
    if mask.k() != solver.k {
        return Err(Error::Dimension(format!(
            "constraint matrix has k = {} but the solver is configured for k = {}",
            mask.k(),
            solver.k
        )));
    }
    let vocab = vectorizer::build_vocabulary(&docs, min_df)?;
    let x = vectorizer::tfidf(&vectorizer::count_matrix(&docs, &vocab))?;
    write(&out_dir.join(VOCABULARY), &vocab.to_tsv())?;
    write(&out_dir.join(TFIDF), &x.to_coordinate())?;

    let supervised = tsnmf::fit(&x, &mask, solver)?;
    let unsupervised = tsnmf::fit(&x, &ConstraintMatrix::all_ones(x.rows(), solver.k), solver)?;
    write_factorization(&out_dir.join(SUPERVISED), &supervised)?;
    write_factorization(&out_dir.join(UNSUPERVISED), &unsupervised)?;
    Ok(FitStats {
        vocabulary_size: vocab.len(),
        nonzeros: x.nnz(),
        supervised_objective: supervised.final_objective(),
        supervised_iterations: supervised.iterations_run,
        unsupervised_objective: unsupervised.final_objective(),
        unsupervised_iterations: unsupervised.iterations_run,
    })
}

/// Topic reports for both runs and their comparison against the documents'
/// community labels.
pub fn report(labeled: &Path, vocabulary: &Path, fit_dir: &Path, top_n: usize, out_dir: &Path) -> Result<report::Comparison> {
    let docs = corpus::read_documents(labeled)?;
    let vocab = Vocabulary::from_tsv(&read(vocabulary)?)?;
    let supervised = read_factorization(&fit_dir.join(SUPERVISED))?;
    let unsupervised = read_factorization(&fit_dir.join(UNSUPERVISED))?;
    if supervised.w.nrows() != docs.len() || unsupervised.w.nrows() != docs.len() {
        return Err(Error::Dimension("factorizations do not match the labeled documents".into()));
    }
    let ids: Vec<String> = docs.iter().map(|d| d.id.clone()).collect();
    write(
        &out_dir.join(TOPICS_SUPERVISED),
        &to_json(&report::topic_report(&supervised, &vocab, &ids, top_n)),
    )?;
    write(
        &out_dir.join(TOPICS_UNSUPERVISED),
        &to_json(&report::topic_report(&unsupervised, &vocab, &ids, top_n)),
    )?;
    let reference: Vec<BTreeSet<usize>> = docs.iter().map(|d| d.labels.clone()).collect();
    let comparison = report::compare_runs(&supervised, &unsupervised, &reference)?;
    write(&out_dir.join(COMPARISON), &to_json(&comparison))?;
    Ok(comparison)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub ingest: IngestStats,
    pub graph: GraphStats,
    pub communities: CommunityStats,
    pub labeling: LabelStats,
    pub fit: FitStats,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub config: PipelineConfig,
    /// Wall-clock milliseconds per stage. The only non-reproducible field.
    pub timings: BTreeMap<String, u128>,
    pub corpus: CorpusStats,
    pub comparison: report::Comparison,
    /// SHA-256 of every other artifact, keyed by path relative to the output
    /// directory.
    pub artifacts: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineOutcome {
    pub output_dir: PathBuf,
    pub manifest: Manifest,
}

fn stage<T>(name: &'static str, timings: &mut BTreeMap<String, u128>, f: impl FnOnce() -> Result<T>) -> Result<T> {
    let start = Instant::now();
    let out = f().map_err(|e| Error::Stage {
        stage: name,
        source: Box::new(e),
    })?;
    timings.insert(name.to_string(), start.elapsed().as_millis());
    Ok(out)
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Runs every stage into `config.output_dir`. Nothing is written if the
/// configuration is invalid or the input file cannot be read.
pub fn run_pipeline(config: &PipelineConfig) -> Result<PipelineOutcome> {
    config.validate()?;
    let input = config
        .input_path
        .as_deref()
        .ok_or_else(|| Error::Config("input_path is required".into()))?;
    let out = config
        .output_dir
        .as_deref()
        .ok_or_else(|| Error::Config("output_dir is required".into()))?;
    if !input.is_file() {
        return Err(Error::Stage {
            stage: "ingest",
            source: Box::new(Error::io(
                input,
                std::io::Error::new(std::io::ErrorKind::NotFound, "input file not found"),
            )),
        });
    }

    let mut timings = BTreeMap::new();
    let ingest_stats = stage("ingest", &mut timings, || ingest(input, &config.filter_rules(), out))?;
    let graph_stats = stage("graph", &mut timings, || graph(&out.join(DOCUMENTS), config.tau, out))?;
    let community_stats = stage("communities", &mut timings, || {
        communities(&out.join(GRAPH), &out.join(GRAPH_NODES), config.resolution, config.seed, out)
    })?;
    let settings = LabelSettings {
        num_communities: config.num_communities,
        k: config.k,
        target_labeled_ratio: config.target_labeled_ratio,
        seed: config.seed,
    };
    let label_stats = stage("label", &mut timings, || {
        label(&out.join(DOCUMENTS), &out.join(PARTITION), &settings, out)
    })?;
    let fit_stats = stage("fit", &mut timings, || {
        fit(&out.join(LABELED), &out.join(CONSTRAINT), config.min_df, &config.solver(), out)
    })?;
    let comparison = stage("report", &mut timings, || {
        report(&out.join(LABELED), &out.join(VOCABULARY), out, config.top_n, out)
    })?;

    let mut artifacts = BTreeMap::new();
    for name in ARTIFACTS.iter().filter(|&&a| a != MANIFEST) {
        let path = out.join(name);
        let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
        artifacts.insert(name.to_string(), sha256_hex(&bytes));
    }
    let manifest = Manifest {
        config: config.clone(),
        timings,
        corpus: CorpusStats {
            ingest: ingest_stats,
            graph: graph_stats,
            communities: community_stats,
            labeling: label_stats,
            fit: fit_stats,
        },
        comparison,
        artifacts,
    };
    write(&out.join(MANIFEST), &to_json(&manifest))?;
    Ok(PipelineOutcome {
        output_dir: out.to_path_buf(),
        manifest,
    })
}

/// Reads back a `pipeline` run's TF-IDF matrix.
pub fn read_tfidf(out_dir: &Path) -> Result<vectorizer::DocTermMatrix> {
    vectorizer::DocTermMatrix::from_coordinate(&read(&out_dir.join(TFIDF))?, MatrixKind::Tfidf)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_follow_reported_settings() {
        let c = PipelineConfig::default();
        assert_eq!(
            (c.min_chars, c.resolution, c.num_communities, c.k, c.target_labeled_ratio),
            (160, 0.3, 70, 80, 0.5)
        );
        c.validate().unwrap();
    }

    #[test]
    fn json_fields_optional() {
        let c = PipelineConfig::from_json("{}").unwrap();
        assert_eq!(c, PipelineConfig::default());
        let c = PipelineConfig::from_json(r#"{"k": 10, "num_communities": 5}"#).unwrap();
        assert_eq!((c.k, c.num_communities, c.tau), (10, 5, 2));
        assert!(PipelineConfig::from_json(r#"{"kk": 1}"#).is_err());
    }

    #[test]
    fn communities_above_k_rejected() {
        let c = PipelineConfig {
            num_communities: 81,
            ..PipelineConfig::default()
        };
        assert!(matches!(c.validate(), Err(Error::Config(_))));
    }

    #[test]
    fn missing_input_writes_nothing() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("out");
        let c = PipelineConfig {
            input_path: Some(dir.path().join("absent.jsonl")),
            output_dir: Some(out.clone()),
            ..PipelineConfig::default()
        };
        assert!(matches!(run_pipeline(&c), Err(Error::Stage { stage: "ingest", .. })));
        assert!(!out.exists());
    }
}
