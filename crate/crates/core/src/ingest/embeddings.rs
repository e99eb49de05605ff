use std::collections::BTreeMap;
use std::path::Path;

use super::{read_text, source_name};
use crate::datamodel::normalize_id;
use crate::error::{Error, Result};

/// Word vectors of one fixed dimension. No vector has zero norm.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    dim: usize,
    vectors: BTreeMap<String, Vec<f64>>,
}

impl EmbeddingTable {
    /// Builds a table; the first occurrence of a word wins.
    pub fn from_entries<I, S>(dim: usize, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, Vec<f64>)>,
        S: AsRef<str>,
    {
        if dim == 0 {
            return Err(Error::InvalidArgument("embedding dimension must be at least 1".into()));
        }
        let mut vectors = BTreeMap::new();
        for (word, v) in entries {
            let word = normalize_id(word.as_ref());
            check_vector(&word, &v, dim)?;
            vectors.entry(word).or_insert(v);
        }
        Ok(Self { dim, vectors })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, word: &str) -> Option<&[f64]> {
        self.vectors.get(word).map(Vec::as_slice)
    }

    pub fn contains(&self, word: &str) -> bool {
        self.vectors.contains_key(word)
    }

    /// Entries in word order.
    pub fn iter(&self) -> impl Iterator<Item = (&String, &Vec<f64>)> {
        self.vectors.iter()
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    /// Writes the text format read by [`parse_embeddings`].
    pub fn to_text(&self) -> String {
        let mut out = format!("d={}\n", self.dim);
        for (w, v) in &self.vectors {
            out.push_str(w);
            for x in v {
                out.push(' ');
                out.push_str(&x.to_string());
            }
            out.push('\n');
        }
        out
    }
}

fn check_vector(word: &str, v: &[f64], dim: usize) -> Result<()> {
    if v.len() != dim {
        return Err(Error::InvalidArgument(format!(
            "vector for '{word}' has dimension {}, expected {dim}",
            v.len()
        )));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidArgument(format!("vector for '{word}' is not finite")));
    }
    if v.iter().all(|&x| x == 0.0) {
        return Err(Error::InvalidArgument(format!("vector for '{word}' has zero norm")));
    }
    Ok(())
}

/// Cosine similarity. Callers guarantee non-zero norms.
pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    dot / (na * nb)
}

pub fn load_embeddings(path: &Path) -> Result<EmbeddingTable> {
    parse_embeddings(&read_text(path)?, &source_name(path))
}

/// Parses `d=<int>` followed by `word v1 .. vd` lines. The last `d` tokens
/// are the vector; everything before them is the (possibly multiword) word.
/// Duplicate words keep their first vector and log a warning.
pub fn parse_embeddings(text: &str, source: &str) -> Result<EmbeddingTable> {
    let mut lines = text.lines().enumerate();
    let dim: usize = lines
        .next()
        .and_then(|(_, h)| h.trim().strip_prefix("d="))
        .and_then(|d| d.trim().parse().ok())
        .filter(|&d| d >= 1)
        .ok_or_else(|| Error::parse(source, 1, "missing 'd=<int>' header"))?;

    let mut vectors = BTreeMap::new();
    for (i, raw) in lines {
        let line = i + 1;
        let tokens: Vec<&str> = raw.split_whitespace().collect();
        if tokens.is_empty() {
            continue;
        }
        if tokens.len() < dim + 1 {
            return Err(Error::parse(source, line, format!("expected a word and {dim} values")));
        }
        let split = tokens.len() - dim;
        let word = normalize_id(&tokens[..split].join(" "));
        let mut v = Vec::with_capacity(dim);
        for t in &tokens[split..] {
            let x: f64 = t
                .parse()
                .map_err(|_| Error::parse(source, line, format!("malformed float '{t}'")))?;
            v.push(x);
        }
        check_vector(&word, &v, dim).map_err(|e| Error::parse(source, line, e.to_string()))?;
        if vectors.contains_key(&word) {
            log::warn!("{source}:{line}: duplicate word '{word}', keeping the first vector");
            continue;
        }
        vectors.insert(word, v);
    }
    Ok(EmbeddingTable { dim, vectors })
}
