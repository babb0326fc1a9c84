//! Topic summaries and supervised-vs-unsupervised comparison metrics.

use std::collections::{BTreeMap, BTreeSet};

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tsnmf::Factorization;
use crate::vectorizer::Vocabulary;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WordWeight {
    pub token: String,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Topic {
    pub id: usize,
    pub words: Vec<WordWeight>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DocumentTopics {
    pub id: String,
    /// `None` when the document's coefficient row is all zero.
    pub dominant_topic: Option<usize>,
    pub coefficients: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicReport {
    pub topics: Vec<Topic>,
    pub documents: Vec<DocumentTopics>,
}

/// The `top_n` heaviest tokens of every H row; zero weights are skipped and
/// ties go to the lower token index.
pub fn top_words(h: &Array2<f64>, vocab: &Vocabulary, top_n: usize) -> Vec<Topic> {
    h.outer_iter()
        .enumerate()
        .map(|(id, row)| {
            let mut idx: Vec<usize> = (0..row.len()).filter(|&j| row[j] > 0.0).collect();
            idx.sort_by(|&a, &b| row[b].total_cmp(&row[a]).then(a.cmp(&b)));
            let words = idx
                .into_iter()
                .take(top_n)
                .map(|j| WordWeight {
                    token: vocab.token(j).to_string(),
                    weight: row[j],
                })
                .collect();
            Topic { id, words }
        })
        .collect()
}

/// Row-wise argmax with ties to the lowest component; all-zero rows are `None`.
pub fn dominant_topics(w: &Array2<f64>) -> Vec<Option<usize>> {
    w.outer_iter()
        .map(|row| {
            let mut best: Option<(usize, f64)> = None;
            for (j, &v) in row.iter().enumerate() {
                if v > 0.0 && best.is_none_or(|(_, b)| v > b) {
                    best = Some((j, v));
                }
            }
            best.map(|(j, _)| j)
        })
        .collect()
}

pub fn topic_report(fit: &Factorization, vocab: &Vocabulary, doc_ids: &[String], top_n: usize) -> TopicReport {
    let dominant = dominant_topics(&fit.w);
    let documents = doc_ids
        .iter()
        .zip(fit.w.outer_iter())
        .zip(dominant)
        .map(|((id, row), dominant_topic)| DocumentTopics {
            id: id.clone(),
            dominant_topic,
            coefficients: row.to_vec(),
        })
        .collect();
    TopicReport {
        topics: top_words(&fit.h, vocab, top_n),
        documents,
    }
}

/// Fraction of items whose cluster's majority class matches their own class.
pub fn purity<C: Ord, R: Ord>(clusters: &[C], classes: &[R]) -> f64 {
    assert_eq!(clusters.len(), classes.len());
    if clusters.is_empty() {
        return 0.0;
    }
    let mut table: BTreeMap<&C, BTreeMap<&R, usize>> = BTreeMap::new();
    for (c, r) in clusters.iter().zip(classes) {
        *table.entry(c).or_default().entry(r).or_default() += 1;
    }
    let hits: usize = table.values().map(|row| row.values().copied().max().unwrap_or(0)).sum();
    hits as f64 / clusters.len() as f64
}

fn entropy(counts: impl Iterator<Item = usize>, n: f64) -> f64 {
    counts
        .filter(|&c| c > 0)
        .map(|c| {
            let p = c as f64 / n;
            -p * p.ln()
        })
        .sum()
}

/// Normalized mutual information with natural-log entropies and
/// arithmetic-mean normalisation, 2 I(U;V) / (H(U) + H(V)). Two single-cluster
/// labelings agree perfectly and score 1.
pub fn nmi<C: Ord, R: Ord>(clusters: &[C], classes: &[R]) -> f64 {
    assert_eq!(clusters.len(), classes.len());
    let n = clusters.len() as f64;
    if clusters.is_empty() {
        return 0.0;
    }
    let mut joint: BTreeMap<(&C, &R), usize> = BTreeMap::new();
    let mut by_cluster: BTreeMap<&C, usize> = BTreeMap::new();
    let mut by_class: BTreeMap<&R, usize> = BTreeMap::new();
    for (c, r) in clusters.iter().zip(classes) {
        *joint.entry((c, r)).or_default() += 1;
        *by_cluster.entry(c).or_default() += 1;
        *by_class.entry(r).or_default() += 1;
    }
    let hu = entropy(by_cluster.values().copied(), n);
    let hv = entropy(by_class.values().copied(), n);
    if hu + hv == 0.0 {
        return 1.0;
    }
    let mi: f64 = joint
        .iter()
        .map(|(&(c, r), &count)| {
            let pij = count as f64 / n;
            let pi = by_cluster[c] as f64 / n;
            let pj = by_class[r] as f64 / n;
            pij * (pij / (pi * pj)).ln()
        })
        .sum();
    (2.0 * mi / (hu + hv)).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComparisonResult {
    pub purity: f64,
    pub nmi: f64,
    pub objective: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub supervised: ComparisonResult,
    pub unsupervised: ComparisonResult,
}

/// Scores one run's dominant topics against the reference, using only the
/// documents that carry exactly one reference label.
pub fn evaluate(run: &Factorization, reference: &[BTreeSet<usize>]) -> Result<ComparisonResult> {
    if reference.len() != run.w.nrows() {
        return Err(Error::Dimension(format!(
            "{} reference label sets for {} documents",
            reference.len(),
            run.w.nrows()
        )));
    }
    let dominant = dominant_topics(&run.w);
    let (clusters, classes): (Vec<Option<usize>>, Vec<usize>) = dominant
        .into_iter()
        .zip(reference)
        .filter(|(_, r)| r.len() == 1)
        .map(|(d, r)| (d, *r.iter().next().unwrap()))
        .unzip();
    if classes.is_empty() {
        return Err(Error::NoSingleLabel);
    }
    Ok(ComparisonResult {
        purity: purity(&clusters, &classes),
        nmi: nmi(&clusters, &classes),
        objective: run.final_objective(),
    })
}

/// Scores both runs of a dual fit against the same reference labels.
pub fn compare_runs(
    supervised: &Factorization,
    unsupervised: &Factorization,
    reference: &[BTreeSet<usize>],
) -> Result<Comparison> {
    Ok(Comparison {
        supervised: evaluate(supervised, reference)?,
        unsupervised: evaluate(unsupervised, reference)?,
    })
}
