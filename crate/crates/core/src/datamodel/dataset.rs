use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::normalize_id;
use crate::error::{Error, Result};

/// Gold associations: noun id to the set of property ids that hold for it.
pub type GoldSets = BTreeMap<String, BTreeSet<String>>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Noun {
    pub id: String,
    pub singular: String,
    pub plural: String,
    #[serde(default)]
    pub image_ids: Vec<String>,
}

impl Noun {
    pub fn new(id: &str, singular: &str, plural: &str) -> Self {
        Self {
            id: normalize_id(id),
            singular: singular.trim().to_string(),
            plural: plural.trim().to_string(),
            image_ids: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Property {
    pub id: String,
    pub surface: String,
}

impl Property {
    pub fn new(surface: &str) -> Self {
        Self {
            id: normalize_id(surface),
            surface: surface.split_whitespace().collect::<Vec<_>>().join(" "),
        }
    }
}

/// A semantic-norm dataset: nouns, the shared candidate pool, and gold
/// noun-to-property associations.
///
/// Fields are public so that malformed datasets can be represented and then
/// checked with [`validate_dataset`]; the ingest parsers only ever produce
/// valid ones.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NormDataset {
    pub name: String,
    pub nouns: Vec<Noun>,
    pub candidates: Vec<Property>,
    pub gold: GoldSets,
}

impl NormDataset {
    pub fn noun(&self, id: &str) -> Option<&Noun> {
        self.nouns.iter().find(|n| n.id == id)
    }

    pub fn property(&self, id: &str) -> Option<&Property> {
        self.candidates.iter().find(|p| p.id == id)
    }

    pub fn noun_ids(&self) -> Vec<String> {
        self.nouns.iter().map(|n| n.id.clone()).collect()
    }

    pub fn property_ids(&self) -> Vec<String> {
        self.candidates.iter().map(|p| p.id.clone()).collect()
    }

    /// Gold pairs in (noun, property) order.
    pub fn gold_pairs(&self) -> Vec<(String, String)> {
        self.gold
            .iter()
            .flat_map(|(n, props)| props.iter().map(move |p| (n.clone(), p.clone())))
            .collect()
    }

    /// Same dataset restricted to the given nouns. The candidate pool is kept whole.
    pub fn restrict_nouns(&self, name: &str, keep: &BTreeSet<String>) -> NormDataset {
        NormDataset {
            name: name.to_string(),
            nouns: self.nouns.iter().filter(|n| keep.contains(&n.id)).cloned().collect(),
            candidates: self.candidates.clone(),
            gold: self
                .gold
                .iter()
                .filter(|(n, _)| keep.contains(*n))
                .map(|(n, p)| (n.clone(), p.clone()))
                .collect(),
        }
    }
}

/// One broken dataset invariant.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum Violation {
    EmptyNounId,
    DuplicateNoun(String),
    EmptySurfaceForm(String),
    NonCanonicalId(String),
    EmptyPropertyId,
    DuplicateProperty(String),
    GoldForUnknownNoun(String),
    EmptyGoldSet(String),
    GoldPropertyNotInPool { noun: String, property: String },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::EmptyNounId => write!(f, "noun with empty id"),
            Violation::DuplicateNoun(id) => write!(f, "duplicate noun '{id}'"),
            Violation::EmptySurfaceForm(id) => write!(f, "noun '{id}' has an empty singular or plural form"),
            Violation::NonCanonicalId(id) => write!(f, "id '{id}' is not lowercased and trimmed"),
            Violation::EmptyPropertyId => write!(f, "property with empty id"),
            Violation::DuplicateProperty(id) => write!(f, "duplicate property '{id}' in candidate pool"),
            Violation::GoldForUnknownNoun(id) => write!(f, "gold entry for unknown noun '{id}'"),
            Violation::EmptyGoldSet(id) => write!(f, "noun '{id}' has an empty gold set"),
            Violation::GoldPropertyNotInPool { noun, property } => {
                write!(
                    f,
                    "gold property '{property}' of noun '{noun}' is not in the candidate pool"
                )
            }
        }
    }
}

/// Checks every dataset invariant. An empty result means the dataset is valid.
///
/// The result is sorted, so it does not depend on the order of nouns or candidates.
pub fn validate_dataset(dataset: &NormDataset) -> Vec<Violation> {
    let mut out = Vec::new();

    let mut noun_ids = BTreeSet::new();
    for noun in &dataset.nouns {
        if noun.id.is_empty() {
            out.push(Violation::EmptyNounId);
            continue;
        }
        if normalize_id(&noun.id) != noun.id {
            out.push(Violation::NonCanonicalId(noun.id.clone()));
        }
        if !noun_ids.insert(noun.id.as_str()) {
            out.push(Violation::DuplicateNoun(noun.id.clone()));
        }
        if noun.singular.trim().is_empty() || noun.plural.trim().is_empty() {
            out.push(Violation::EmptySurfaceForm(noun.id.clone()));
        }
    }

    let mut pool = BTreeSet::new();
    for prop in &dataset.candidates {
        if prop.id.is_empty() {
            out.push(Violation::EmptyPropertyId);
            continue;
        }
        if normalize_id(&prop.id) != prop.id {
            out.push(Violation::NonCanonicalId(prop.id.clone()));
        }
        if !pool.insert(prop.id.as_str()) {
            out.push(Violation::DuplicateProperty(prop.id.clone()));
        }
    }

    for (noun, props) in &dataset.gold {
        if !noun_ids.contains(noun.as_str()) {
            out.push(Violation::GoldForUnknownNoun(noun.clone()));
        }
        if props.is_empty() {
            out.push(Violation::EmptyGoldSet(noun.clone()));
        }
        for p in props {
            if !pool.contains(p.as_str()) {
                out.push(Violation::GoldPropertyNotInPool {
                    noun: noun.clone(),
                    property: p.clone(),
                });
            }
        }
    }

    out.sort();
    out
}

/// Summary counts of a dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub noun_count: usize,
    pub property_count: usize,
    pub pair_count: usize,
    /// Full precision; use [`DatasetStats::mean_display`] for the rounded value.
    pub mean_properties_per_noun: f64,
}

impl DatasetStats {
    pub fn mean_display(&self) -> String {
        format!("{:.1}", self.mean_properties_per_noun)
    }
}

impl fmt::Display for DatasetStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "nouns={} properties={} pairs={} per_noun={}",
            self.noun_count,
            self.property_count,
            self.pair_count,
            self.mean_display()
        )
    }
}

pub fn dataset_stats(dataset: &NormDataset) -> Result<DatasetStats> {
    if dataset.nouns.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let noun_count = dataset.nouns.len();
    let property_count = dataset
        .candidates
        .iter()
        .map(|p| p.id.as_str())
        .collect::<BTreeSet<_>>()
        .len();
    let pair_count: usize = dataset.gold.values().map(BTreeSet::len).sum();
    Ok(DatasetStats {
        noun_count,
        property_count,
        pair_count,
        mean_properties_per_noun: pair_count as f64 / noun_count as f64,
    })
}
