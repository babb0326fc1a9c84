//! Shared inputs for the criterion benchmarks.

use hashtopic::corpus::Document;
use hashtopic::synthetic::{planted_corpus, PlantedConfig};

/// Tokenized planted-topic documents.
pub fn planted_documents(num_docs: usize, seed: u64) -> Vec<Document> {
    let cfg = PlantedConfig {
        num_docs,
        seed,
        ..PlantedConfig::default()
    };
    planted_corpus(&cfg)
        .documents
        .iter()
        .map(|r| Document::from_text(r.id.clone(), &r.text))
        .collect()
}
