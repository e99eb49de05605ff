use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{read_text, source_name};
use crate::datamodel::normalize_id;
use crate::error::{Error, Result};

/// Scale of the raw ratings, declared by the `#scale=` header.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RatingScale {
    ZeroToFive,
    Unit,
}

impl RatingScale {
    fn max(self) -> f64 {
        match self {
            RatingScale::ZeroToFive => 5.0,
            RatingScale::Unit => 1.0,
        }
    }
}

/// Where a concreteness score came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Gold,
    Predicted,
    Fallback,
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Provenance::Gold => "gold",
            Provenance::Predicted => "predicted",
            Provenance::Fallback => "fallback",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcretenessEntry {
    /// Normalized to `[0, 1]`.
    pub score: f64,
    pub provenance: Provenance,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pos: Option<String>,
}

/// Word-to-concreteness map with scores in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConcretenessTable {
    raw_scale: RatingScale,
    entries: BTreeMap<String, ConcretenessEntry>,
}

impl ConcretenessTable {
    /// Builds a table from already-normalized scores.
    pub fn from_scores<I, S>(raw_scale: RatingScale, scores: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, f64)>,
        S: AsRef<str>,
    {
        let mut entries = BTreeMap::new();
        for (word, score) in scores {
            if !(0.0..=1.0).contains(&score) {
                return Err(Error::InvalidArgument(format!(
                    "concreteness {score} for '{}' is outside [0, 1]",
                    word.as_ref()
                )));
            }
            entries.entry(normalize_id(word.as_ref())).or_insert(ConcretenessEntry {
                score,
                provenance: Provenance::Gold,
                pos: None,
            });
        }
        Ok(Self { raw_scale, entries })
    }

    pub fn raw_scale(&self) -> RatingScale {
        self.raw_scale
    }

    pub fn get(&self, word: &str) -> Option<&ConcretenessEntry> {
        self.entries.get(word)
    }

    pub fn score(&self, word: &str) -> Option<f64> {
        self.entries.get(word).map(|e| e.score)
    }

    /// Entries in word order.
    pub fn iter(&self) -> impl Iterator<Item = (&String, &ConcretenessEntry)> {
        self.entries.iter()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

pub fn load_concreteness(path: &Path) -> Result<ConcretenessTable> {
    parse_concreteness(&read_text(path)?, &source_name(path))
}

/// Parses `#scale=zero_to_five|unit` followed by `word,score[,pos]` lines.
///
/// Zero-to-five scores are divided by 5. A score outside the declared range
/// is an error; so is a missing header.
pub fn parse_concreteness(text: &str, source: &str) -> Result<ConcretenessTable> {
    let mut lines = text.lines().enumerate();
    let scale = match lines.next() {
        Some((_, header)) => match header.trim().strip_prefix("#scale=") {
            Some("zero_to_five") => RatingScale::ZeroToFive,
            Some("unit") => RatingScale::Unit,
            Some(other) => return Err(Error::parse(source, 1, format!("unknown scale '{other}'"))),
            None => return Err(Error::parse(source, 1, "missing '#scale=zero_to_five|unit' header")),
        },
        None => return Err(Error::parse(source, 1, "missing '#scale=zero_to_five|unit' header")),
    };

    let mut entries = BTreeMap::new();
    for (i, raw) in lines {
        let line = i + 1;
        let raw = raw.trim();
        if raw.is_empty()
            || raw.starts_with('#')
            || raw.eq_ignore_ascii_case("word,score")
            || raw.eq_ignore_ascii_case("word,score,pos")
        {
            continue;
        }
        let fields: Vec<&str> = raw.split(',').collect();
        if !(2..=3).contains(&fields.len()) {
            return Err(Error::parse(source, line, "expected word,score[,pos]"));
        }
        let word = normalize_id(fields[0]);
        if word.is_empty() {
            return Err(Error::parse(source, line, "empty word"));
        }
        let value: f64 = fields[1]
            .trim()
            .parse()
            .map_err(|_| Error::parse(source, line, format!("bad score '{}'", fields[1])))?;
        if !value.is_finite() || value < 0.0 || value > scale.max() {
            return Err(Error::parse(
                source,
                line,
                format!("score {value} for '{word}' is outside the declared scale"),
            ));
        }
        let score = match scale {
            RatingScale::ZeroToFive => value / 5.0,
            RatingScale::Unit => value,
        };
        let pos = fields.get(2).map(|p| p.trim().to_lowercase()).filter(|p| !p.is_empty());
        if entries.contains_key(&word) {
            log::warn!("{source}:{line}: duplicate word '{word}', keeping the first rating");
            continue;
        }
        entries.insert(
            word,
            ConcretenessEntry {
                score,
                provenance: Provenance::Gold,
                pos,
            },
        );
    }
    Ok(ConcretenessTable {
        raw_scale: scale,
        entries,
    })
}
