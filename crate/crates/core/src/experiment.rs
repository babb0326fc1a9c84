//! Supervised-vs-unsupervised comparison on a planted-topic corpus, scored
//! against the planted topics rather than the community labels.

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::corpus::{Document, FilterRules};
use crate::error::Result;
use crate::hashgraph::{build_graph, louvain, ModularityParams};
use crate::labeler::{build_constraint_matrix, downsample_unlabeled, label_documents, labeled_fraction, CommunityLookup, ConstraintMatrix};
use crate::report::{compare_runs, Comparison};
use crate::synthetic::{planted_corpus, PlantedConfig};
use crate::tsnmf::{fit, SolverConfig};
use crate::vectorizer::{build_vocabulary, count_matrix, tfidf};

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub corpus: PlantedConfig,
    pub filter: FilterRules,
    pub min_df: usize,
    pub tau: u64,
    pub resolution: f64,
    pub num_communities: usize,
    pub target_labeled_ratio: f64,
    pub solver: SolverConfig,
}

impl ExperimentConfig {
    /// Five planted topics over 2,000 short documents with a large, flat
    /// vocabulary; six components of which five can be seeded by communities.
    pub fn planted(seed: u64) -> Self {
        ExperimentConfig {
            corpus: PlantedConfig {
                seed,
                ..PlantedConfig::default()
            },
            filter: FilterRules {
                min_chars: 1,
                drop_retweets: true,
                drop_replies: true,
            },
            min_df: 5,
            tau: 2,
            resolution: 1.0,
            num_communities: 5,
            target_labeled_ratio: 0.5,
            solver: SolverConfig {
                k: 6,
                seed,
                ..SolverConfig::default()
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentOutcome {
    pub documents: usize,
    pub communities: usize,
    pub labeled_fraction: f64,
    pub comparison: Comparison,
}

pub fn run_planted_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutcome> {
    let planted = planted_corpus(&cfg.corpus);
    let truth: HashMap<&str, usize> = planted
        .documents
        .iter()
        .zip(&planted.topics)
        .map(|(d, &t)| (d.id.as_str(), t))
        .collect();
    let docs: Vec<Document> = planted
        .documents
        .iter()
        .filter(|r| cfg.filter.accepts(r))
        .map(|r| Document::from_text(r.id.clone(), &r.text))
        .collect();

    let graph = build_graph(&docs, cfg.tau);
    let partition = louvain(&graph, &ModularityParams::new(cfg.resolution)?, cfg.corpus.seed);
    let lookup = CommunityLookup::from_partition(&partition, cfg.num_communities);
    let labeled = label_documents(&docs, &lookup);
    let kept = downsample_unlabeled(&labeled, cfg.target_labeled_ratio, cfg.corpus.seed)?;

    let mask = build_constraint_matrix(&kept, cfg.solver.k)?;
    let vocab = build_vocabulary(&kept, cfg.min_df)?;
    let x = tfidf(&count_matrix(&kept, &vocab))?;
    let supervised = fit(&x, &mask, &cfg.solver)?;
    let unsupervised = fit(&x, &ConstraintMatrix::all_ones(x.rows(), cfg.solver.k), &cfg.solver)?;

    let reference: Vec<BTreeSet<usize>> = kept.iter().map(|d| BTreeSet::from([truth[d.id.as_str()]])).collect();
    Ok(ExperimentOutcome {
        documents: kept.len(),
        communities: partition.num_communities(),
        labeled_fraction: labeled_fraction(&labeled),
        comparison: compare_runs(&supervised, &unsupervised, &reference)?,
    })
}
