//! Core domain types shared by every stage of the pipeline.

mod dataset;
mod matrix;
mod prompt;
mod ranking;

pub use dataset::{dataset_stats, validate_dataset, DatasetStats, GoldSets, NormDataset, Noun, Property, Violation};
pub use matrix::{MatrixMeta, ScoreMatrix, SENTINEL_SCORE};
pub use prompt::{NounNumber, PromptTemplate, DEFAULT_PROMPT_BANK, MASK_SLOT, NOUN_SLOT};
pub use ranking::{RankedList, Ranking};

/// Canonical form of a noun or property id: trimmed, lowercased, with runs of
/// internal whitespace collapsed to one space.
pub fn normalize_id(raw: &str) -> String {
    raw.split_whitespace()
        .map(str::to_lowercase)
        .collect::<Vec<_>>()
        .join(" ")
}
