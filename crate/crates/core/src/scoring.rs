//! Turning adapter records into dense score matrices, plus the baseline scorers.
//!
//! * Text LM: a property split into `k` wordpieces scores the mean of its `k`
//!   piece log-probabilities.
//! * Image-conditioned LM: the same piece mean per image, then the mean over
//!   the noun's images.
//! * Dual encoder: mean over the noun's images of the cosine between the
//!   property prompt embedding and the image embedding.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::datamodel::{MatrixMeta, NormDataset, Noun, ScoreMatrix, SENTINEL_SCORE};
use crate::error::{Error, Result};
use crate::ingest::{cosine, EmbedKind, EmbeddingRecord, EmbeddingTable, LmScoreRecord, NgramTable};
use crate::rng::SplitMix64;

pub const DEFAULT_IMAGE_BUDGET: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PieceRule {
    Mean,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ImageRule {
    Mean,
}

/// What to do when a (noun, property) cell has no record.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MissingPolicy {
    Error,
    /// Store a sentinel that ranks after every scored property.
    FillNegInfRankLast,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AggregationSpec {
    pub piece_rule: PieceRule,
    pub image_rule: ImageRule,
    pub missing_policy: MissingPolicy,
    /// Maximum number of images used per noun.
    pub image_budget: usize,
}

impl Default for AggregationSpec {
    fn default() -> Self {
        Self {
            piece_rule: PieceRule::Mean,
            image_rule: ImageRule::Mean,
            missing_policy: MissingPolicy::Error,
            image_budget: DEFAULT_IMAGE_BUDGET,
        }
    }
}

fn mean(values: impl IntoIterator<Item = f64>) -> f64 {
    let (sum, n) = values.into_iter().fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    sum / n as f64
}

/// Images used for a noun: the noun's own image list when it has one,
/// otherwise the available image ids in sorted order; truncated to the budget.
fn select_images(noun: &Noun, available: &BTreeSet<String>, budget: usize) -> Vec<String> {
    let ordered: Vec<String> = if noun.image_ids.is_empty() {
        available.iter().cloned().collect()
    } else {
        noun.image_ids
            .iter()
            .filter(|i| available.contains(*i))
            .cloned()
            .collect()
    };
    ordered.into_iter().take(budget).collect()
}

/// Aggregates per-piece log-probability records of one model and prompt into
/// a score matrix over `dataset`. Records for nouns or properties outside the
/// dataset are ignored.
pub fn aggregate_lm(records: &[LmScoreRecord], dataset: &NormDataset, spec: &AggregationSpec) -> Result<ScoreMatrix> {
    let first = records
        .first()
        .ok_or_else(|| Error::Missing("no lm records to aggregate".into()))?;
    let imaged = first.image_id.is_some();
    for r in records {
        if r.model_id != first.model_id {
            return Err(Error::Mismatch(format!(
                "records mix models '{}' and '{}'",
                first.model_id, r.model_id
            )));
        }
        if r.prompt_id != first.prompt_id {
            return Err(Error::Mismatch(format!(
                "records mix prompts '{}' and '{}'",
                first.prompt_id, r.prompt_id
            )));
        }
        if r.image_id.is_some() != imaged {
            return Err(Error::Mismatch(
                "records mix image-conditioned and text-only scores".into(),
            ));
        }
    }

    let nouns: HashMap<&str, usize> = dataset
        .nouns
        .iter()
        .enumerate()
        .map(|(i, n)| (n.id.as_str(), i))
        .collect();
    let props: HashMap<&str, usize> = dataset
        .candidates
        .iter()
        .enumerate()
        .map(|(j, p)| (p.id.as_str(), j))
        .collect();

    // (noun, property) -> image -> piece mean
    let mut cells: HashMap<(usize, usize), BTreeMap<Option<&str>, f64>> = HashMap::new();
    let mut images_of: Vec<BTreeSet<String>> = vec![BTreeSet::new(); dataset.nouns.len()];
    let mut skipped = 0usize;
    for r in records {
        let (Some(&i), Some(&j)) = (nouns.get(r.noun_id.as_str()), props.get(r.property_id.as_str())) else {
            skipped += 1;
            continue;
        };
        let score = match spec.piece_rule {
            PieceRule::Mean => mean(r.piece_logprobs.iter().copied()),
        };
        let image = r.image_id.as_deref();
        if cells.entry((i, j)).or_default().insert(image, score).is_some() {
            return Err(Error::InvalidArgument(format!(
                "duplicate record for ({}, {}, {})",
                r.noun_id,
                r.property_id,
                image.unwrap_or("-")
            )));
        }
        if let Some(img) = image {
            images_of[i].insert(img.to_string());
        }
    }
    if skipped > 0 {
        log::debug!("ignored {skipped} records outside the dataset");
    }

    let selected: Vec<Vec<String>> = dataset
        .nouns
        .iter()
        .zip(&images_of)
        .map(|(n, avail)| select_images(n, avail, spec.image_budget))
        .collect();

    let width = dataset.candidates.len();
    let mut scores = vec![0.0; dataset.nouns.len() * width];
    let mut meta = MatrixMeta::new(&first.model_id, "lm");
    meta.prompt_id = Some(first.prompt_id.clone());
    meta.spec = Some(*spec);

    for (i, noun) in dataset.nouns.iter().enumerate() {
        for (j, prop) in dataset.candidates.iter().enumerate() {
            let cell = cells.get(&(i, j));
            let value = if imaged {
                let per_image: Vec<f64> = selected[i]
                    .iter()
                    .filter_map(|img| cell.and_then(|c| c.get(&Some(img.as_str()))).copied())
                    .collect();
                let complete = !selected[i].is_empty() && per_image.len() == selected[i].len();
                if !complete && spec.missing_policy == MissingPolicy::Error {
                    return Err(Error::Missing(format!(
                        "({}, {}) has scores for {} of {} images",
                        noun.id,
                        prop.id,
                        per_image.len(),
                        selected[i].len()
                    )));
                }
                match spec.image_rule {
                    ImageRule::Mean if !per_image.is_empty() => Some(mean(per_image)),
                    ImageRule::Mean => None,
                }
            } else {
                cell.and_then(|c| c.get(&None)).copied()
            };
            match value {
                Some(v) => scores[i * width + j] = v,
                None => {
                    if spec.missing_policy == MissingPolicy::Error {
                        return Err(Error::Missing(format!("no score for ({}, {})", noun.id, prop.id)));
                    }
                    meta.sentinels.push((noun.id.clone(), prop.id.clone()));
                    scores[i * width + j] = SENTINEL_SCORE;
                }
            }
        }
    }

    ScoreMatrix::from_parts(meta, dataset.noun_ids(), dataset.property_ids(), scores)
}

fn unit(v: &[f64]) -> Vec<f64> {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter().map(|x| x / norm).collect()
}

/// Mean cosine between each property's text-prompt embedding and the
/// embeddings of the noun's images.
pub fn clip_scores(
    model_id: &str,
    text_embeds: &[EmbeddingRecord],
    image_embeds: &[EmbeddingRecord],
    dataset: &NormDataset,
    spec: &AggregationSpec,
) -> Result<ScoreMatrix> {
    let mut dim = None;
    let mut check = |r: &EmbeddingRecord, want: EmbedKind| -> Result<()> {
        if r.kind != want {
            return Err(Error::InvalidArgument(format!(
                "embedding '{}' has the wrong kind",
                r.key
            )));
        }
        if r.vector.iter().all(|&x| x == 0.0) {
            return Err(Error::InvalidArgument(format!("embedding '{}' has zero norm", r.key)));
        }
        match dim {
            None => dim = Some(r.vector.len()),
            Some(d) if d != r.vector.len() => {
                return Err(Error::Mismatch("text and image embeddings differ in dimension".into()))
            }
            _ => {}
        }
        Ok(())
    };

    let mut text: HashMap<&str, Vec<f64>> = HashMap::new();
    for r in text_embeds {
        check(r, EmbedKind::TextPrompt)?;
        if text.insert(r.key.as_str(), unit(&r.vector)).is_some() {
            return Err(Error::InvalidArgument(format!(
                "duplicate text embedding for '{}'",
                r.key
            )));
        }
    }
    let mut images: HashMap<&str, BTreeMap<String, Vec<f64>>> = HashMap::new();
    for r in image_embeds {
        check(r, EmbedKind::Image)?;
        let noun = r.noun_id.as_deref().unwrap_or_default();
        if images
            .entry(noun)
            .or_default()
            .insert(r.key.clone(), unit(&r.vector))
            .is_some()
        {
            return Err(Error::InvalidArgument(format!("duplicate image embedding '{}'", r.key)));
        }
    }

    let width = dataset.candidates.len();
    let mut scores = vec![0.0; dataset.nouns.len() * width];
    let mut meta = MatrixMeta::new(model_id, "clip");
    meta.spec = Some(*spec);
    let empty = BTreeMap::new();

    for (i, noun) in dataset.nouns.iter().enumerate() {
        let noun_images = images.get(noun.id.as_str()).unwrap_or(&empty);
        let available: BTreeSet<String> = noun_images.keys().cloned().collect();
        let chosen = select_images(noun, &available, spec.image_budget);
        if chosen.is_empty() && spec.missing_policy == MissingPolicy::Error {
            return Err(Error::Missing(format!("noun '{}' has no image embeddings", noun.id)));
        }
        for (j, prop) in dataset.candidates.iter().enumerate() {
            let t = text.get(prop.id.as_str());
            if t.is_none() && spec.missing_policy == MissingPolicy::Error {
                return Err(Error::Missing(format!("no text embedding for property '{}'", prop.id)));
            }
            match t {
                Some(t) if !chosen.is_empty() => {
                    let sims = chosen.iter().map(|img| {
                        let v = &noun_images[img];
                        t.iter().zip(v).map(|(a, b)| a * b).sum::<f64>()
                    });
                    scores[i * width + j] = match spec.image_rule {
                        ImageRule::Mean => mean(sims),
                    };
                }
                _ => {
                    meta.sentinels.push((noun.id.clone(), prop.id.clone()));
                    scores[i * width + j] = SENTINEL_SCORE;
                }
            }
        }
    }

    ScoreMatrix::from_parts(meta, dataset.noun_ids(), dataset.property_ids(), scores)
}

/// I.i.d. uniform `[0, 1)` scores drawn in noun-major order from a seeded generator.
pub fn baseline_random(dataset: &NormDataset, seed: u64) -> Result<ScoreMatrix> {
    let mut rng = SplitMix64::new(seed);
    let n = dataset.nouns.len() * dataset.candidates.len();
    let scores: Vec<f64> = (0..n).map(|_| rng.next_f64()).collect();
    let mut meta = MatrixMeta::new("random", "random");
    meta.seed = Some(seed);
    ScoreMatrix::from_parts(meta, dataset.noun_ids(), dataset.property_ids(), scores)
}

/// Cosine between the noun and property word vectors. Out-of-vocabulary
/// nouns or properties get sentinel cells.
pub fn baseline_embedding(dataset: &NormDataset, embeds: &EmbeddingTable) -> Result<ScoreMatrix> {
    let mut meta = MatrixMeta::new("embedding", "embedding");
    let mut scores = Vec::with_capacity(dataset.nouns.len() * dataset.candidates.len());
    for noun in &dataset.nouns {
        let nv = embeds
            .get(&noun.id)
            .or_else(|| embeds.get(&crate::datamodel::normalize_id(&noun.singular)));
        for prop in &dataset.candidates {
            match (nv, embeds.get(&prop.id)) {
                (Some(a), Some(b)) => scores.push(cosine(a, b)),
                _ => {
                    meta.sentinels.push((noun.id.clone(), prop.id.clone()));
                    scores.push(SENTINEL_SCORE);
                }
            }
        }
    }
    ScoreMatrix::from_parts(meta, dataset.noun_ids(), dataset.property_ids(), scores)
}

/// Corpus frequency of the bigram `<property> <noun singular>`; absent pairs score 0.
pub fn baseline_ngram(dataset: &NormDataset, ngrams: &NgramTable) -> Result<ScoreMatrix> {
    let scores: Vec<f64> = dataset
        .nouns
        .iter()
        .flat_map(|noun| {
            dataset
                .candidates
                .iter()
                .map(move |prop| ngrams.bigram(&prop.surface, &noun.singular) as f64)
        })
        .collect();
    ScoreMatrix::from_parts(
        MatrixMeta::new("ngram", "ngram"),
        dataset.noun_ids(),
        dataset.property_ids(),
        scores,
    )
}
