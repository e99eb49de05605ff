use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::datamodel::{GoldSets, RankedList, Ranking};
use crate::error::{Error, Result};

/// Per-noun detail behind a [`MetricReport`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NounDetail {
    pub noun: String,
    pub gold_count: usize,
    /// Rank of the best-placed gold property, if any is ranked.
    pub best_rank: Option<usize>,
    /// Number of gold properties inside the top K, per K.
    pub hits: BTreeMap<usize, usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub model_id: String,
    /// Top-K accuracy as a percentage, per K.
    pub accuracy: BTreeMap<usize, f64>,
    /// Mean top-K recall as a percentage, per K.
    pub recall: BTreeMap<usize, f64>,
    /// Mean reciprocal rank over gold pairs; `None` for partial rankings.
    pub mrr: Option<f64>,
    pub noun_count: usize,
    pub pair_count: usize,
    pub per_noun: Vec<NounDetail>,
}

/// Checks the K list and returns the (noun, list, gold) triples to score,
/// in noun-id order.
fn prepare<'a>(
    ranking: &'a Ranking,
    gold: &'a GoldSets,
    ks: &[usize],
) -> Result<Vec<(&'a String, &'a RankedList, &'a std::collections::BTreeSet<String>)>> {
    for &k in ks {
        if k == 0 {
            return Err(Error::InvalidArgument("K must be at least 1".into()));
        }
        if !ranking.is_partial() && k > ranking.pool().len() {
            return Err(Error::InvalidArgument(format!(
                "K = {k} exceeds the candidate pool size {}",
                ranking.pool().len()
            )));
        }
    }
    let mut rows = Vec::with_capacity(gold.len());
    for (noun, props) in gold {
        if props.is_empty() {
            continue;
        }
        let list = ranking.get(noun).ok_or_else(|| {
            Error::Missing(format!(
                "ranking '{}' has no list for noun '{noun}'",
                ranking.model_id()
            ))
        })?;
        if !ranking.is_partial() {
            if let Some(p) = props.iter().find(|p| list.rank(p).is_none()) {
                return Err(Error::Mismatch(format!(
                    "gold property '{p}' of '{noun}' is not in the candidate pool"
                )));
            }
        }
        rows.push((noun, list, props));
    }
    if rows.is_empty() {
        return Err(Error::EmptyDataset);
    }
    Ok(rows)
}

fn hits_at(list: &RankedList, gold: &std::collections::BTreeSet<String>, k: usize) -> usize {
    gold.iter().filter(|p| list.rank(p).is_some_and(|r| r <= k)).count()
}

/// Percentage of nouns with at least one gold property in the top `k`.
pub fn accuracy_at_k(ranking: &Ranking, gold: &GoldSets, k: usize) -> Result<f64> {
    let rows = prepare(ranking, gold, &[k])?;
    let hit = rows.iter().filter(|(_, l, g)| hits_at(l, g, k) > 0).count();
    Ok(100.0 * hit as f64 / rows.len() as f64)
}

/// Mean over nouns of the fraction of gold properties in the top `k`, as a
/// percentage.
pub fn recall_at_k(ranking: &Ranking, gold: &GoldSets, k: usize) -> Result<f64> {
    let rows = prepare(ranking, gold, &[k])?;
    let sum: f64 = rows
        .iter()
        .map(|(_, l, g)| hits_at(l, g, k) as f64 / g.len() as f64)
        .sum();
    Ok(100.0 * sum / rows.len() as f64)
}

/// Mean of `1 / rank` over all gold (noun, property) pairs. Returns `None`
/// for partial rankings, where ranks of unlisted properties are undefined.
pub fn mrr(ranking: &Ranking, gold: &GoldSets) -> Result<Option<f64>> {
    if ranking.is_partial() {
        return Ok(None);
    }
    let rows = prepare(ranking, gold, &[])?;
    let (mut sum, mut n) = (0.0, 0usize);
    for (_, list, g) in &rows {
        for p in g.iter() {
            sum += 1.0 / list.rank(p).expect("checked by prepare") as f64;
            n += 1;
        }
    }
    Ok(Some(sum / n as f64))
}

/// Every metric for every K in one pass, with per-noun detail.
pub fn evaluate(ranking: &Ranking, gold: &GoldSets, ks: &[usize]) -> Result<MetricReport> {
    if ks.is_empty() {
        return Err(Error::InvalidArgument("the K list is empty".into()));
    }
    let rows = prepare(ranking, gold, ks)?;
    let n = rows.len() as f64;
    let mut accuracy = BTreeMap::new();
    let mut recall = BTreeMap::new();
    for &k in ks {
        let mut hit_nouns = 0usize;
        let mut recall_sum = 0.0;
        for (_, list, g) in &rows {
            let h = hits_at(list, g, k);
            if h > 0 {
                hit_nouns += 1;
            }
            recall_sum += h as f64 / g.len() as f64;
        }
        accuracy.insert(k, 100.0 * hit_nouns as f64 / n);
        recall.insert(k, 100.0 * recall_sum / n);
    }

    let per_noun = rows
        .iter()
        .map(|(noun, list, g)| NounDetail {
            noun: noun.to_string(),
            gold_count: g.len(),
            best_rank: g.iter().filter_map(|p| list.rank(p)).min(),
            hits: ks.iter().map(|&k| (k, hits_at(list, g, k))).collect(),
        })
        .collect();

    Ok(MetricReport {
        model_id: ranking.model_id().to_string(),
        accuracy,
        recall,
        mrr: mrr(ranking, gold)?,
        noun_count: rows.len(),
        pair_count: rows.iter().map(|(_, _, g)| g.len()).sum(),
        per_noun,
    })
}
