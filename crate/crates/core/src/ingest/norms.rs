use std::collections::{BTreeSet, HashMap};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{read_text, source_name};
use crate::datamodel::{normalize_id, GoldSets, NormDataset, Noun, Property};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormsFormat {
    /// `noun<TAB>singular<TAB>plural<TAB>property` per line.
    PairsTsv,
    /// `{"noun", "singular", "plural", "properties": [...]}` per line.
    RecordsJsonl,
}

impl NormsFormat {
    /// Guesses the format from the file extension (`.jsonl` or `.tsv`).
    pub fn from_path(path: &Path) -> Option<Self> {
        match path.extension()?.to_str()? {
            "jsonl" => Some(NormsFormat::RecordsJsonl),
            "tsv" | "txt" => Some(NormsFormat::PairsTsv),
            _ => None,
        }
    }
}

impl FromStr for NormsFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pairs_tsv" => Ok(NormsFormat::PairsTsv),
            "records_jsonl" => Ok(NormsFormat::RecordsJsonl),
            other => Err(Error::InvalidArgument(format!("unknown norms format '{other}'"))),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct NounLine {
    noun: String,
    singular: String,
    plural: String,
    properties: Vec<String>,
}

/// Accumulates rows in first-appearance order.
struct Builder<'a> {
    source: &'a str,
    nouns: Vec<Noun>,
    noun_index: HashMap<String, usize>,
    candidates: Vec<Property>,
    seen_props: BTreeSet<String>,
    gold: GoldSets,
}

impl<'a> Builder<'a> {
    fn new(source: &'a str) -> Self {
        Self {
            source,
            nouns: Vec::new(),
            noun_index: HashMap::new(),
            candidates: Vec::new(),
            seen_props: BTreeSet::new(),
            gold: GoldSets::new(),
        }
    }

    fn add(&mut self, line: usize, noun: &str, singular: &str, plural: &str, property: &str) -> Result<()> {
        let fields = [
            ("noun", noun),
            ("singular", singular),
            ("plural", plural),
            ("property", property),
        ];
        if let Some((name, _)) = fields.iter().find(|(_, v)| v.trim().is_empty()) {
            return Err(Error::parse(self.source, line, format!("empty {name} field")));
        }
        let candidate = Noun::new(noun, singular, plural);
        match self.noun_index.get(&candidate.id) {
            Some(&i) => {
                let known = &self.nouns[i];
                if known.singular != candidate.singular || known.plural != candidate.plural {
                    return Err(Error::parse(
                        self.source,
                        line,
                        format!("noun '{}' listed with conflicting surface forms", candidate.id),
                    ));
                }
            }
            None => {
                self.noun_index.insert(candidate.id.clone(), self.nouns.len());
                self.nouns.push(candidate.clone());
            }
        }
        let prop = Property::new(property);
        if self.seen_props.insert(prop.id.clone()) {
            self.candidates.push(prop.clone());
        }
        // Repeated (noun, property) rows collapse into the set.
        self.gold.entry(candidate.id).or_default().insert(prop.id);
        Ok(())
    }

    fn finish(self, name: &str) -> Result<NormDataset> {
        if self.nouns.is_empty() {
            return Err(Error::parse(self.source, 1, "no data rows"));
        }
        Ok(NormDataset {
            name: name.to_string(),
            nouns: self.nouns,
            candidates: self.candidates,
            gold: self.gold,
        })
    }
}

/// Loads a norm dataset. The dataset is named after the file stem; the
/// candidate pool is the union of all properties in the file.
pub fn parse_norms(path: &Path, format: NormsFormat) -> Result<NormDataset> {
    let text = read_text(path)?;
    let name = path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("dataset")
        .to_string();
    parse_norms_text(&name, &source_name(path), &text, format)
}

pub fn parse_norms_str(name: &str, text: &str, format: NormsFormat) -> Result<NormDataset> {
    parse_norms_text(name, name, text, format)
}

fn parse_norms_text(name: &str, source: &str, text: &str, format: NormsFormat) -> Result<NormDataset> {
    let mut b = Builder::new(source);
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        if raw.trim().is_empty() || raw.starts_with('#') {
            continue;
        }
        match format {
            NormsFormat::PairsTsv => {
                let f: Vec<&str> = raw.split('\t').collect();
                if f.len() != 4 {
                    return Err(Error::parse(
                        source,
                        line,
                        format!("expected 4 tab-separated fields, found {}", f.len()),
                    ));
                }
                b.add(line, f[0], f[1], f[2], f[3])?;
            }
            NormsFormat::RecordsJsonl => {
                let rec: NounLine = serde_json::from_str(raw).map_err(|e| Error::parse(source, line, e.to_string()))?;
                if rec.properties.is_empty() {
                    return Err(Error::parse(
                        source,
                        line,
                        format!("noun '{}' has no properties", rec.noun),
                    ));
                }
                for p in &rec.properties {
                    b.add(line, &rec.noun, &rec.singular, &rec.plural, p)?;
                }
            }
        }
    }
    b.finish(name)
}

/// Serializes a dataset in either norms format. Nouns keep their order,
/// properties are listed in id order. Candidates outside every gold set
/// cannot be represented and are dropped.
pub fn format_norms(dataset: &NormDataset, format: NormsFormat) -> Result<String> {
    let mut out = String::new();
    for noun in &dataset.nouns {
        let Some(props) = dataset.gold.get(&noun.id) else {
            continue;
        };
        let surfaces: Vec<String> = props
            .iter()
            .map(|p| dataset.property(p).map_or_else(|| p.clone(), |c| c.surface.clone()))
            .collect();
        match format {
            NormsFormat::PairsTsv => {
                for s in &surfaces {
                    out.push_str(&format!("{}\t{}\t{}\t{}\n", noun.id, noun.singular, noun.plural, s));
                }
            }
            NormsFormat::RecordsJsonl => {
                let line = NounLine {
                    noun: noun.id.clone(),
                    singular: noun.singular.clone(),
                    plural: noun.plural.clone(),
                    properties: surfaces,
                };
                out.push_str(&serde_json::to_string(&line)?);
                out.push('\n');
            }
        }
    }
    Ok(out)
}

/// Loads a `noun<TAB>property` pair list (prototypical subsets and the like).
pub fn load_pairs(path: &Path) -> Result<Vec<(String, String)>> {
    parse_pairs(&read_text(path)?, &source_name(path))
}

pub fn parse_pairs(text: &str, source: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        if raw.trim().is_empty() || raw.starts_with('#') {
            continue;
        }
        let f: Vec<&str> = raw.split('\t').collect();
        if f.len() != 2 || f.iter().any(|x| x.trim().is_empty()) {
            return Err(Error::parse(source, i + 1, "expected noun<TAB>property"));
        }
        out.push((normalize_id(f[0]), normalize_id(f[1])));
    }
    Ok(out)
}
