use std::collections::{BTreeSet, HashMap};
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scoring::AggregationSpec;

/// Stored score of a cell that has no real score (out-of-vocabulary word or a
/// gap filled under a permissive missing policy). It is finite and below every
/// real score, and such cells are also listed in [`MatrixMeta::sentinels`].
pub const SENTINEL_SCORE: f64 = f64::MIN;

/// Provenance of a score matrix, serialized as the JSON sidecar.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixMeta {
    pub model_id: String,
    /// Producing operation: `lm`, `clip`, `random`, `embedding` or `ngram`.
    pub method: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prompt_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spec: Option<AggregationSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Sentinel cells as sorted (noun, property) pairs.
    #[serde(default)]
    pub sentinels: Vec<(String, String)>,
}

impl MatrixMeta {
    pub fn new(model_id: &str, method: &str) -> Self {
        Self {
            model_id: model_id.to_string(),
            method: method.to_string(),
            prompt_id: None,
            spec: None,
            seed: None,
            sentinels: Vec::new(),
        }
    }
}

/// Dense noun-by-property score table of one model.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreMatrix {
    meta: MatrixMeta,
    noun_ids: Vec<String>,
    property_ids: Vec<String>,
    scores: Vec<f64>,
    sentinel: Vec<bool>,
}

impl ScoreMatrix {
    /// Builds a matrix from row-major `scores`. Cells listed in
    /// `meta.sentinels` are overwritten with [`SENTINEL_SCORE`]; every other
    /// cell must be finite.
    pub fn from_parts(
        mut meta: MatrixMeta,
        noun_ids: Vec<String>,
        property_ids: Vec<String>,
        mut scores: Vec<f64>,
    ) -> Result<Self> {
        if scores.len() != noun_ids.len() * property_ids.len() {
            return Err(Error::Mismatch(format!(
                "{} scores for a {}x{} matrix",
                scores.len(),
                noun_ids.len(),
                property_ids.len()
            )));
        }
        let row_of = unique_index(&noun_ids, "noun")?;
        let col_of = unique_index(&property_ids, "property")?;

        let mut sentinel = vec![false; scores.len()];
        let cells: BTreeSet<(String, String)> = meta.sentinels.drain(..).collect();
        for (noun, prop) in &cells {
            let (Some(&i), Some(&j)) = (row_of.get(noun.as_str()), col_of.get(prop.as_str())) else {
                return Err(Error::Mismatch(format!(
                    "sentinel ({noun}, {prop}) is outside the matrix"
                )));
            };
            let idx = i * property_ids.len() + j;
            sentinel[idx] = true;
            scores[idx] = SENTINEL_SCORE;
        }
        meta.sentinels = cells.into_iter().collect();

        for (idx, s) in scores.iter().enumerate() {
            if !sentinel[idx] && !s.is_finite() {
                let (i, j) = (idx / property_ids.len(), idx % property_ids.len());
                return Err(Error::InvalidArgument(format!(
                    "non-finite score for ({}, {})",
                    noun_ids[i], property_ids[j]
                )));
            }
        }

        Ok(Self {
            meta,
            noun_ids,
            property_ids,
            scores,
            sentinel,
        })
    }

    pub fn model_id(&self) -> &str {
        &self.meta.model_id
    }

    pub fn meta(&self) -> &MatrixMeta {
        &self.meta
    }

    pub fn noun_ids(&self) -> &[String] {
        &self.noun_ids
    }

    pub fn property_ids(&self) -> &[String] {
        &self.property_ids
    }

    pub fn score(&self, noun: usize, property: usize) -> f64 {
        self.scores[noun * self.property_ids.len() + property]
    }

    pub fn row(&self, noun: usize) -> &[f64] {
        let w = self.property_ids.len();
        &self.scores[noun * w..(noun + 1) * w]
    }

    pub fn is_sentinel(&self, noun: usize, property: usize) -> bool {
        self.sentinel[noun * self.property_ids.len() + property]
    }

    /// Writes the CSV grid: header `noun,<property ids>`, then one row per
    /// noun. Sentinel cells are written as `NA`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["noun".to_string()];
        header.extend(self.property_ids.iter().cloned());
        w.write_record(&header)?;
        for (i, noun) in self.noun_ids.iter().enumerate() {
            let mut row = vec![noun.clone()];
            for j in 0..self.property_ids.len() {
                row.push(if self.is_sentinel(i, j) {
                    "NA".to_string()
                } else {
                    format!("{}", self.score(i, j))
                });
            }
            w.write_record(&row)?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is utf-8"))
    }

    /// Parses a CSV grid written by [`ScoreMatrix::write_csv`]. `NA` cells
    /// must be listed as sentinels in `meta`.
    pub fn read_csv(text: &str, meta: MatrixMeta) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .from_reader(text.as_bytes());
        let mut rows = reader.records();
        let header = rows
            .next()
            .ok_or_else(|| Error::parse("matrix csv", 1, "empty file"))?
            .map_err(|e| Error::parse("matrix csv", 1, e.to_string()))?;
        if header.get(0) != Some("noun") {
            return Err(Error::parse("matrix csv", 1, "first header cell must be 'noun'"));
        }
        let property_ids: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
        let listed: BTreeSet<&(String, String)> = meta.sentinels.iter().collect();

        let mut noun_ids = Vec::new();
        let mut scores = Vec::new();
        for (k, row) in rows.enumerate() {
            let line = k + 2;
            let row = row.map_err(|e| Error::parse("matrix csv", line, e.to_string()))?;
            if row.len() != property_ids.len() + 1 {
                return Err(Error::parse("matrix csv", line, "row width differs from header"));
            }
            let noun = row[0].to_string();
            for (j, cell) in row.iter().skip(1).enumerate() {
                if cell == "NA" {
                    if !listed.contains(&(noun.clone(), property_ids[j].clone())) {
                        return Err(Error::parse("matrix csv", line, "NA cell not declared as sentinel"));
                    }
                    scores.push(SENTINEL_SCORE);
                } else {
                    let v: f64 = cell
                        .parse()
                        .map_err(|_| Error::parse("matrix csv", line, format!("bad number '{cell}'")))?;
                    scores.push(v);
                }
            }
            noun_ids.push(noun);
        }
        ScoreMatrix::from_parts(meta, noun_ids, property_ids, scores)
    }
}

fn unique_index<'a>(ids: &'a [String], what: &str) -> Result<HashMap<&'a str, usize>> {
    let mut map = HashMap::with_capacity(ids.len());
    for (i, id) in ids.iter().enumerate() {
        if map.insert(id.as_str(), i).is_some() {
            return Err(Error::InvalidArgument(format!("duplicate {what} id '{id}'")));
        }
    }
    Ok(map)
}
