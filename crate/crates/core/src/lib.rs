//! Noun-property ranking: score aggregation, concreteness-weighted fusion of
//! a text-model ranking with a vision-model ranking, and evaluation against
//! semantic-norm ground truth.
//!
//! The pipeline runs in stages, each a module:
//!
//! 1. [`ingest`] parses norm datasets, concreteness ratings, embeddings,
//!    n-gram counts and adapter score records.
//! 2. [`scoring`] turns records into dense [`datamodel::ScoreMatrix`] tables.
//! 3. [`fusion`] ranks matrices and fuses two rankings.
//! 4. [`evaluation`] computes metrics and analyses; [`report`] and [`plot`]
//!    write them out.

pub mod concreteness;
pub mod datamodel;
pub mod error;
pub mod evaluation;
pub mod fusion;
pub mod ingest;
pub mod plot;
pub mod report;
pub mod rng;
pub mod scoring;

pub use error::{Error, Result};
