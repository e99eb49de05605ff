use std::collections::HashMap;
use std::path::Path;

use super::{read_text, source_name};
use crate::datamodel::normalize_id;
use crate::error::{Error, Result};

/// Unigram and bigram corpus counts. Lookups of absent entries return 0.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct NgramTable {
    unigram: HashMap<String, u64>,
    bigram: HashMap<(String, String), u64>,
}

impl NgramTable {
    pub fn unigram(&self, word: &str) -> u64 {
        self.unigram.get(&normalize_id(word)).copied().unwrap_or(0)
    }

    pub fn bigram(&self, first: &str, second: &str) -> u64 {
        self.bigram
            .get(&(normalize_id(first), normalize_id(second)))
            .copied()
            .unwrap_or(0)
    }

    pub fn insert_unigram(&mut self, word: &str, count: u64) {
        self.unigram.entry(normalize_id(word)).or_insert(count);
    }

    pub fn insert_bigram(&mut self, first: &str, second: &str, count: u64) {
        self.bigram
            .entry((normalize_id(first), normalize_id(second)))
            .or_insert(count);
    }

    pub fn unigram_len(&self) -> usize {
        self.unigram.len()
    }

    pub fn bigram_len(&self) -> usize {
        self.bigram.len()
    }
}

pub fn load_ngrams(path: &Path) -> Result<NgramTable> {
    parse_ngrams(&read_text(path)?, &source_name(path))
}

/// Parses `unigram<TAB>word<TAB>count` and `bigram<TAB>w1<TAB>w2<TAB>count`
/// lines. Duplicate entries keep the first count and log a warning.
pub fn parse_ngrams(text: &str, source: &str) -> Result<NgramTable> {
    let mut table = NgramTable::default();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        if raw.trim().is_empty() || raw.starts_with('#') {
            continue;
        }
        let f: Vec<&str> = raw.split('\t').collect();
        let parse_count = |s: &str| -> Result<u64> {
            s.trim()
                .parse()
                .map_err(|_| Error::parse(source, line, format!("count '{s}' is not a non-negative integer")))
        };
        match f.as_slice() {
            ["unigram", w, c] => {
                let c = parse_count(c)?;
                if table.unigram.contains_key(&normalize_id(w)) {
                    log::warn!("{source}:{line}: duplicate unigram '{w}'");
                }
                table.insert_unigram(w, c);
            }
            ["bigram", a, b, c] => {
                let c = parse_count(c)?;
                if table.bigram.contains_key(&(normalize_id(a), normalize_id(b))) {
                    log::warn!("{source}:{line}: duplicate bigram '{a} {b}'");
                }
                table.insert_bigram(a, b, c);
            }
            _ => return Err(Error::parse(source, line, "expected a unigram or bigram row")),
        }
    }
    Ok(table)
}
