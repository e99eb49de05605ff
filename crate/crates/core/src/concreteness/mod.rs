//! Per-property concreteness: gold lookup with fallbacks, and a trainable
//! ridge-regression predictor for words without gold ratings.

mod lookup;
mod predictor;
mod spearman;

pub use lookup::{common_prefix_len, lcs_len, lookup, FallbackPolicy, GoldConcreteness};
pub use predictor::{
    suffix_feature, train_predictor, ConcretenessPredictor, PredictedConcreteness, DEFAULT_LAMBDA, DEFAULT_POS,
    DEFAULT_SUFFIXES,
};
pub use spearman::{average_ranks, spearman};

use serde::Serialize;

use crate::error::Result;
use crate::ingest::Provenance;

/// A resolved concreteness score.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Concreteness {
    pub score: f64,
    pub provenance: Provenance,
    /// The table word the score was taken from (the query itself for gold
    /// hits and predictions).
    pub matched: String,
}

/// Anything that can supply a concreteness weight for a property.
pub trait ConcretenessSource {
    fn concreteness(&self, word: &str) -> Result<Concreteness>;
}
