//! Adapter interchange records (JSON Lines).
//!
//! ```text
//! {"kind":"lm_piece","model_id":..,"noun":..,"property":..,"prompt":..,"image":str|null,"piece_logprobs":[..]}
//! {"kind":"embed","embed_kind":"text_prompt"|"image","key":..,"noun":str|null,"vector":[..]}
//! {"kind":"generated","model_id":..,"noun":..,"properties":[..]}
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{read_text, source_name};
use crate::datamodel::normalize_id;
use crate::error::{Error, Result};

/// Per-piece natural-log probabilities of one property for one noun, prompt
/// and (for image-conditioned models) image.
#[derive(Debug, Clone, PartialEq)]
pub struct LmScoreRecord {
    pub model_id: String,
    pub noun_id: String,
    pub property_id: String,
    pub prompt_id: String,
    pub image_id: Option<String>,
    pub piece_logprobs: Vec<f64>,
}

impl LmScoreRecord {
    /// Number of wordpieces the property was split into.
    pub fn piece_count(&self) -> usize {
        self.piece_logprobs.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmbedKind {
    TextPrompt,
    Image,
}

/// A dual-encoder embedding: a property prompt (keyed by property id) or an
/// image (keyed by image id, owned by a noun).
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingRecord {
    pub kind: EmbedKind,
    pub key: String,
    pub noun_id: Option<String>,
    pub vector: Vec<f64>,
}

/// An ordered list of properties produced by a generative model.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedRecord {
    pub model_id: String,
    pub noun_id: String,
    pub properties: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Record {
    Lm(LmScoreRecord),
    Embedding(EmbeddingRecord),
    Generated(GeneratedRecord),
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum Wire {
    LmPiece {
        model_id: String,
        noun: String,
        property: String,
        prompt: String,
        image: Option<String>,
        piece_logprobs: Vec<f64>,
    },
    Embed {
        embed_kind: EmbedKind,
        key: String,
        noun: Option<String>,
        vector: Vec<f64>,
    },
    Generated {
        model_id: String,
        noun: String,
        properties: Vec<String>,
    },
}

impl Record {
    /// Serializes to one line of the interchange format (no trailing newline).
    pub fn to_json_line(&self) -> Result<String> {
        let wire = match self {
            Record::Lm(r) => Wire::LmPiece {
                model_id: r.model_id.clone(),
                noun: r.noun_id.clone(),
                property: r.property_id.clone(),
                prompt: r.prompt_id.clone(),
                image: r.image_id.clone(),
                piece_logprobs: r.piece_logprobs.clone(),
            },
            Record::Embedding(r) => Wire::Embed {
                embed_kind: r.kind,
                key: r.key.clone(),
                noun: r.noun_id.clone(),
                vector: r.vector.clone(),
            },
            Record::Generated(r) => Wire::Generated {
                model_id: r.model_id.clone(),
                noun: r.noun_id.clone(),
                properties: r.properties.clone(),
            },
        };
        Ok(serde_json::to_string(&wire)?)
    }
}

pub fn load_records(path: &Path) -> Result<Vec<Record>> {
    parse_records(&read_text(path)?, &source_name(path))
}

/// Parses and validates a record file.
///
/// `lm_piece` records always carry natural-log probabilities, so every piece
/// must be finite and at most 0. Embedding records must share one dimension
/// and have non-zero norm; image embeddings must name their noun.
pub fn parse_records(text: &str, source: &str) -> Result<Vec<Record>> {
    let mut out = Vec::new();
    let mut dim: Option<usize> = None;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let wire: Wire = serde_json::from_str(raw).map_err(|e| Error::parse(source, line, e.to_string()))?;
        let record = match wire {
            Wire::LmPiece {
                model_id,
                noun,
                property,
                prompt,
                image,
                piece_logprobs,
            } => {
                if piece_logprobs.is_empty() {
                    return Err(Error::parse(source, line, "piece_logprobs is empty"));
                }
                if let Some(bad) = piece_logprobs.iter().find(|&&x| !x.is_finite() || x > 0.0) {
                    return Err(Error::parse(
                        source,
                        line,
                        format!("piece log-probability {bad} is not a finite value <= 0"),
                    ));
                }
                let noun_id = normalize_id(&noun);
                let property_id = normalize_id(&property);
                if noun_id.is_empty() || property_id.is_empty() || model_id.trim().is_empty() {
                    return Err(Error::parse(source, line, "empty model, noun or property"));
                }
                Record::Lm(LmScoreRecord {
                    model_id: model_id.trim().to_string(),
                    noun_id,
                    property_id,
                    prompt_id: prompt.trim().to_string(),
                    image_id: image.map(|s| s.trim().to_string()),
                    piece_logprobs,
                })
            }
            Wire::Embed {
                embed_kind,
                key,
                noun,
                vector,
            } => {
                if vector.is_empty() {
                    return Err(Error::parse(source, line, "empty vector"));
                }
                match dim {
                    None => dim = Some(vector.len()),
                    Some(d) if d != vector.len() => {
                        return Err(Error::parse(
                            source,
                            line,
                            format!("vector has dimension {} but the file uses {d}", vector.len()),
                        ));
                    }
                    _ => {}
                }
                if vector.iter().any(|x| !x.is_finite()) {
                    return Err(Error::parse(source, line, "non-finite vector component"));
                }
                if vector.iter().all(|&x| x == 0.0) {
                    return Err(Error::parse(source, line, "zero-norm vector"));
                }
                let (key, noun_id) = match embed_kind {
                    EmbedKind::TextPrompt => (normalize_id(&key), noun.map(|n| normalize_id(&n))),
                    EmbedKind::Image => {
                        let Some(n) = noun else {
                            return Err(Error::parse(source, line, "image embedding without a noun"));
                        };
                        (key.trim().to_string(), Some(normalize_id(&n)))
                    }
                };
                Record::Embedding(EmbeddingRecord {
                    kind: embed_kind,
                    key,
                    noun_id,
                    vector,
                })
            }
            Wire::Generated {
                model_id,
                noun,
                properties,
            } => {
                let mut seen = std::collections::HashSet::new();
                let mut props = Vec::with_capacity(properties.len());
                for p in properties {
                    let id = normalize_id(&p);
                    if id.is_empty() {
                        continue;
                    }
                    if seen.insert(id.clone()) {
                        props.push(id);
                    } else {
                        log::warn!("{source}:{line}: duplicate generated property '{id}' dropped");
                    }
                }
                Record::Generated(GeneratedRecord {
                    model_id: model_id.trim().to_string(),
                    noun_id: normalize_id(&noun),
                    properties: props,
                })
            }
        };
        out.push(record);
    }
    Ok(out)
}
