//! Ridge-regression concreteness predictor.
//!
//! Features per word: the z-scored word embedding, a one-hot of the longest
//! matching suffix from a fixed inventory, a one-hot part-of-speech tag, and a
//! bias. Weights solve `(XᵀX + Λ) w = Xᵀy` where `Λ` is `λ` on every
//! non-bias diagonal entry and 0 for the bias.

use std::collections::BTreeSet;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{Concreteness, ConcretenessSource};
use crate::datamodel::normalize_id;
use crate::error::{Error, Result};
use crate::ingest::{ConcretenessTable, EmbeddingTable, Provenance};

pub const DEFAULT_SUFFIXES: [&str; 14] = [
    "able", "al", "ant", "ary", "ed", "ent", "ful", "ic", "ing", "ish", "ive", "less", "ous", "y",
];
pub const DEFAULT_POS: &str = "adjective";
pub const DEFAULT_LAMBDA: f64 = 1.0;

/// Index of the longest suffix in `suffixes` that `word` ends with (the word
/// must be longer than the suffix).
pub fn suffix_feature(word: &str, suffixes: &[String]) -> Option<usize> {
    suffixes
        .iter()
        .enumerate()
        .filter(|(_, s)| word.len() > s.len() && word.ends_with(s.as_str()))
        .max_by_key(|(i, s)| (s.len(), std::cmp::Reverse(*i)))
        .map(|(i, _)| i)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcretenessPredictor {
    /// Embedding weights, then suffix weights, then POS weights, then the bias.
    pub weights: Vec<f64>,
    pub suffixes: Vec<String>,
    pub pos_tags: Vec<String>,
    pub ridge_lambda: f64,
    pub embedding_dim: usize,
    pub feature_mean: Vec<f64>,
    pub feature_scale: Vec<f64>,
}

impl ConcretenessPredictor {
    fn feature_len(&self) -> usize {
        self.embedding_dim + self.suffixes.len() + self.pos_tags.len() + 1
    }

    fn features(&self, word: &str, vector: &[f64], pos: &str) -> Vec<f64> {
        features(
            word,
            vector,
            pos,
            &self.suffixes,
            &self.pos_tags,
            &self.feature_mean,
            &self.feature_scale,
        )
    }

    /// Unclamped linear output.
    pub fn predict_raw(&self, embeds: &EmbeddingTable, word: &str, pos: Option<&str>) -> Result<f64> {
        let word = normalize_id(word);
        let v = embeds.get(&word).ok_or_else(|| Error::OutOfVocabulary(word.clone()))?;
        if v.len() != self.embedding_dim {
            return Err(Error::Mismatch(format!(
                "embedding dimension {} differs from the predictor's {}",
                v.len(),
                self.embedding_dim
            )));
        }
        let x = self.features(&word, v, pos.unwrap_or(DEFAULT_POS));
        Ok(x.iter().zip(&self.weights).map(|(a, b)| a * b).sum())
    }

    /// Prediction clamped to `[0, 1]`, for a word tagged as an adjective.
    pub fn predict(&self, embeds: &EmbeddingTable, word: &str) -> Result<f64> {
        Ok(self.predict_raw(embeds, word, None)?.clamp(0.0, 1.0))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let p: ConcretenessPredictor = serde_json::from_str(text)?;
        if p.weights.len() != p.feature_len()
            || p.feature_mean.len() != p.embedding_dim
            || p.feature_scale.len() != p.embedding_dim
        {
            return Err(Error::InvalidArgument(
                "predictor weights do not match its feature layout".into(),
            ));
        }
        if p.ridge_lambda.is_nan() || p.ridge_lambda <= 0.0 {
            return Err(Error::InvalidArgument("ridge lambda must be positive".into()));
        }
        Ok(p)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

fn features(
    word: &str,
    vector: &[f64],
    pos: &str,
    suffixes: &[String],
    pos_tags: &[String],
    mean: &[f64],
    scale: &[f64],
) -> Vec<f64> {
    let mut x = Vec::with_capacity(vector.len() + suffixes.len() + pos_tags.len() + 1);
    x.extend(vector.iter().zip(mean).zip(scale).map(|((v, m), s)| (v - m) / s));
    let suffix = suffix_feature(word, suffixes);
    x.extend((0..suffixes.len()).map(|i| if Some(i) == suffix { 1.0 } else { 0.0 }));
    x.extend(pos_tags.iter().map(|t| if t == pos { 1.0 } else { 0.0 }));
    x.push(1.0);
    x
}

/// Fits the predictor on every rated word that is not in `holdout` and has
/// an embedding. Words without embeddings are skipped with a warning.
pub fn train_predictor(
    ratings: &ConcretenessTable,
    embeds: &EmbeddingTable,
    holdout: &BTreeSet<String>,
    lambda: f64,
) -> Result<ConcretenessPredictor> {
    if lambda.is_nan() || lambda <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "ridge lambda must be positive, got {lambda}"
        )));
    }

    let mut rows: Vec<(&str, &[f64], String, f64)> = Vec::new();
    let mut skipped = 0usize;
    for (word, entry) in ratings.iter() {
        if holdout.contains(word) {
            continue;
        }
        let Some(v) = embeds.get(word) else {
            skipped += 1;
            continue;
        };
        let pos = entry.pos.clone().unwrap_or_else(|| DEFAULT_POS.to_string());
        rows.push((word.as_str(), v, pos, entry.score));
    }
    if skipped > 0 {
        log::warn!("skipped {skipped} rated words without embeddings");
    }
    if rows.is_empty() {
        return Err(Error::InvalidArgument(
            "no training words left after holdout and vocabulary filtering".into(),
        ));
    }

    let dim = embeds.dim();
    let n = rows.len() as f64;
    let mut mean = vec![0.0; dim];
    for (_, v, _, _) in &rows {
        for (m, x) in mean.iter_mut().zip(v.iter()) {
            *m += x;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let mut scale = vec![0.0; dim];
    for (_, v, _, _) in &rows {
        for ((s, x), m) in scale.iter_mut().zip(v.iter()).zip(&mean) {
            *s += (x - m) * (x - m);
        }
    }
    for s in scale.iter_mut() {
        *s = (*s / n).sqrt();
        if *s == 0.0 {
            *s = 1.0;
        }
    }

    let suffixes: Vec<String> = DEFAULT_SUFFIXES.iter().map(|s| s.to_string()).collect();
    let pos_tags: Vec<String> = rows
        .iter()
        .map(|(_, _, p, _)| p.clone())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();

    let p = dim + suffixes.len() + pos_tags.len() + 1;
    let mut x = DMatrix::<f64>::zeros(rows.len(), p);
    let mut y = DVector::<f64>::zeros(rows.len());
    for (r, (word, v, pos, score)) in rows.iter().enumerate() {
        let f = features(word, v, pos, &suffixes, &pos_tags, &mean, &scale);
        for (c, val) in f.into_iter().enumerate() {
            x[(r, c)] = val;
        }
        y[r] = *score;
    }

    let mut gram = x.tr_mul(&x);
    for i in 0..p - 1 {
        gram[(i, i)] += lambda;
    }
    let rhs = x.tr_mul(&y);
    let chol = gram
        .cholesky()
        .ok_or_else(|| Error::Degenerate("normal equations are not positive definite".into()))?;
    let w = chol.solve(&rhs);
    if w.iter().any(|v| !v.is_finite()) {
        return Err(Error::Degenerate("solution is not finite".into()));
    }

    Ok(ConcretenessPredictor {
        weights: w.iter().copied().collect(),
        suffixes,
        pos_tags,
        ridge_lambda: lambda,
        embedding_dim: dim,
        feature_mean: mean,
        feature_scale: scale,
    })
}

/// A trained predictor paired with the embeddings it reads.
#[derive(Debug, Clone, Copy)]
pub struct PredictedConcreteness<'a> {
    pub predictor: &'a ConcretenessPredictor,
    pub embeds: &'a EmbeddingTable,
}

impl ConcretenessSource for PredictedConcreteness<'_> {
    fn concreteness(&self, word: &str) -> Result<Concreteness> {
        Ok(Concreteness {
            score: self.predictor.predict(self.embeds, word)?,
            provenance: Provenance::Predicted,
            matched: normalize_id(word),
        })
    }
}
