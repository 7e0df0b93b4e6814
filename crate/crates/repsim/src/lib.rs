//! Representational similarity between models.

pub mod compare;
pub mod pairwise;
pub mod rdm;

pub use compare::{cka_linear, rsa_score, similarity, Correlation, Method, SimilarityScore};
pub use pairwise::{
    cross_scores, pairwise_scores, pairwise_similarity, summarize, write_scores_csv, write_summaries_csv, GroupSummary,
    DEFAULT_RESAMPLES,
};
pub use rdm::{compute_rdm, Metric, Rdm};
