use super::{Concreteness, ConcretenessSource};
use crate::datamodel::normalize_id;
use crate::error::{Error, Result};
use crate::ingest::{cosine, ConcretenessTable, EmbeddingTable, Provenance};

/// How to resolve a word that has no gold rating.
#[derive(Debug, Clone, Copy)]
pub enum FallbackPolicy<'a> {
    /// The table word with the longest common subsequence; ties go to the
    /// longer common prefix, then the lexicographically smaller word.
    LongestMatch,
    /// The table word whose embedding is most cosine-similar to the query's.
    EmbeddingCosine(&'a EmbeddingTable),
    None,
}

/// Length of the longest common subsequence, over chars.
pub fn lcs_len(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    for &ca in &a {
        for (j, &cb) in b.iter().enumerate() {
            cur[j + 1] = if ca == cb { prev[j] + 1 } else { cur[j].max(prev[j + 1]) };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

pub fn common_prefix_len(a: &str, b: &str) -> usize {
    a.chars().zip(b.chars()).take_while(|(x, y)| x == y).count()
}

/// Resolves the concreteness of `word`: the gold entry when present,
/// otherwise the entry picked by `policy`.
pub fn lookup(word: &str, table: &ConcretenessTable, policy: FallbackPolicy<'_>) -> Result<Concreteness> {
    if table.is_empty() {
        return Err(Error::InvalidArgument("concreteness table is empty".into()));
    }
    let query = normalize_id(word);
    if let Some(e) = table.get(&query) {
        return Ok(Concreteness {
            score: e.score,
            provenance: Provenance::Gold,
            matched: query,
        });
    }

    let best = match policy {
        FallbackPolicy::None => return Err(Error::NoConcreteness(query)),
        FallbackPolicy::LongestMatch => {
            let mut best: Option<((usize, usize), &String)> = None;
            // Table iteration is in word order, so keeping only strict
            // improvements leaves the smallest word among ties.
            for (w, _) in table.iter() {
                let key = (lcs_len(&query, w), common_prefix_len(&query, w));
                if best.is_none_or(|(k, _)| key > k) {
                    best = Some((key, w));
                }
            }
            best.map(|(_, w)| w.clone())
        }
        FallbackPolicy::EmbeddingCosine(embeds) => {
            let qv = embeds
                .get(&query)
                .ok_or_else(|| Error::OutOfVocabulary(query.clone()))?;
            let mut best: Option<(f64, &String)> = None;
            for (w, _) in table.iter() {
                if let Some(v) = embeds.get(w) {
                    let sim = cosine(qv, v);
                    if best.is_none_or(|(s, _)| sim > s) {
                        best = Some((sim, w));
                    }
                }
            }
            best.map(|(_, w)| w.clone())
        }
    };

    let matched = best.ok_or_else(|| Error::NoConcreteness(query.clone()))?;
    let score = table.score(&matched).expect("matched word comes from the table");
    Ok(Concreteness {
        score,
        provenance: Provenance::Fallback,
        matched,
    })
}

/// Gold ratings plus a fallback policy, usable as a fusion weight source.
#[derive(Debug, Clone, Copy)]
pub struct GoldConcreteness<'a> {
    pub table: &'a ConcretenessTable,
    pub policy: FallbackPolicy<'a>,
}

impl ConcretenessSource for GoldConcreteness<'_> {
    fn concreteness(&self, word: &str) -> Result<Concreteness> {
        lookup(word, self.table, self.policy)
    }
}
