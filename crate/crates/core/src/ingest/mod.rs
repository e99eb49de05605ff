//! Parsers for every external input and the seeded dev/test split.
//!
//! Each `load_*` function reads a file and delegates to a `parse_*` function
//! over the text, so parsers can be exercised without touching the disk.

mod concreteness;
mod embeddings;
mod ngrams;
mod norms;
mod records;
mod split;

use std::path::Path;

pub use concreteness::{
    load_concreteness, parse_concreteness, ConcretenessEntry, ConcretenessTable, Provenance, RatingScale,
};
pub use embeddings::{cosine, load_embeddings, parse_embeddings, EmbeddingTable};
pub use ngrams::{load_ngrams, parse_ngrams, NgramTable};
pub use norms::{format_norms, load_pairs, parse_norms, parse_norms_str, parse_pairs, NormsFormat};
pub use records::{load_records, parse_records, EmbedKind, EmbeddingRecord, GeneratedRecord, LmScoreRecord, Record};
pub use split::split_dev;

use crate::error::{Error, Result};

pub(crate) fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub(crate) fn source_name(path: &Path) -> String {
    path.display().to_string()
}
