//! Topic extraction for short hashtag-bearing documents.
//!
//! Hashtags that co-occur in the same documents form a weighted graph whose
//! Louvain communities are carried back onto the documents as soft labels.
//! Those labels become a binary mask `L` on the document-topic matrix of a
//! non-negative factorization, `min ‖X − (W⊙L)H‖_F`, so labeled documents can
//! only load on the components of their own communities.
//!
//! The stages live in separate modules: [`corpus`] (ingest and tokenize),
//! [`vectorizer`] (TF-IDF), [`hashgraph`] (co-occurrence graph, modularity,
//! Louvain), [`labeler`] (label transfer, mask, down-sampling), [`tsnmf`]
//! (masked NMF), [`report`] (topic summaries, purity and NMI) and
//! [`pipeline`] (file-based orchestration).

pub mod corpus;
pub mod error;
pub mod experiment;
pub mod hashgraph;
pub mod labeler;
pub mod pipeline;
pub mod report;
pub mod synthetic;
pub mod tsnmf;
pub mod vectorizer;

pub use corpus::{Document, FilterRules, RawDocument};
pub use error::{Error, Result};
pub use hashgraph::{HashtagGraph, ModularityParams, Partition};
pub use labeler::{CommunityLookup, ConstraintMatrix};
pub use pipeline::PipelineConfig;
pub use report::{Comparison, ComparisonResult, TopicReport};
pub use tsnmf::{Factorization, SolverConfig};
pub use vectorizer::{DocTermMatrix, MatrixKind, Vocabulary};
