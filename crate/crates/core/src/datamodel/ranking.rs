use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One noun's ordered property list with 1-based rank lookup.
#[derive(Debug, Clone)]
pub struct RankedList {
    order: Vec<String>,
    positions: HashMap<String, usize>,
}

impl RankedList {
    fn new(order: Vec<String>) -> Result<Self> {
        let mut positions = HashMap::with_capacity(order.len());
        for (i, p) in order.iter().enumerate() {
            if positions.insert(p.clone(), i + 1).is_some() {
                return Err(Error::InvalidArgument(format!(
                    "property '{p}' appears twice in one ranking"
                )));
            }
        }
        Ok(Self { order, positions })
    }

    pub fn order(&self) -> &[String] {
        &self.order
    }

    /// 1-based rank, or `None` when the property is not in the list.
    pub fn rank(&self, property: &str) -> Option<usize> {
        self.positions.get(property).copied()
    }

    /// The first `k` entries (fewer if the list is shorter).
    pub fn top(&self, k: usize) -> &[String] {
        &self.order[..k.min(self.order.len())]
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }
}

impl PartialEq for RankedList {
    fn eq(&self, other: &Self) -> bool {
        self.order == other.order
    }
}

/// Per-noun orderings of candidate properties produced by one model.
///
/// A full ranking orders the whole candidate pool for every noun. A partial
/// ranking (generation mode) holds a duplicate-free prefix per noun that may
/// include properties outside the pool.
#[derive(Debug, Clone, PartialEq)]
pub struct Ranking {
    model_id: String,
    partial: bool,
    /// Sorted candidate pool; empty for partial rankings.
    pool: Vec<String>,
    lists: BTreeMap<String, RankedList>,
}

#[derive(Serialize, Deserialize)]
struct RankingLine {
    noun: String,
    order: Vec<String>,
    partial: bool,
}

impl Ranking {
    /// Builds a full ranking. Every list must be a permutation of `pool`.
    pub fn full(model_id: &str, pool: &[String], lists: BTreeMap<String, Vec<String>>) -> Result<Self> {
        let pool_set: BTreeSet<&String> = pool.iter().collect();
        if pool_set.len() != pool.len() {
            return Err(Error::InvalidArgument("candidate pool contains duplicates".into()));
        }
        let mut out = BTreeMap::new();
        for (noun, order) in lists {
            let list = RankedList::new(order)?;
            if list.len() != pool.len() || !list.order.iter().all(|p| pool_set.contains(p)) {
                return Err(Error::Mismatch(format!(
                    "ranking for noun '{noun}' is not a permutation of the candidate pool"
                )));
            }
            out.insert(noun, list);
        }
        Ok(Self {
            model_id: model_id.to_string(),
            partial: false,
            pool: pool_set.into_iter().cloned().collect(),
            lists: out,
        })
    }

    /// Builds a partial (prefix) ranking. Lists must not contain duplicates.
    pub fn partial(model_id: &str, lists: BTreeMap<String, Vec<String>>) -> Result<Self> {
        let mut out = BTreeMap::new();
        for (noun, order) in lists {
            out.insert(noun, RankedList::new(order)?);
        }
        Ok(Self {
            model_id: model_id.to_string(),
            partial: true,
            pool: Vec::new(),
            lists: out,
        })
    }

    pub fn model_id(&self) -> &str {
        &self.model_id
    }

    pub fn with_model_id(mut self, model_id: &str) -> Self {
        self.model_id = model_id.to_string();
        self
    }

    pub fn is_partial(&self) -> bool {
        self.partial
    }

    /// Sorted candidate pool (empty for partial rankings).
    pub fn pool(&self) -> &[String] {
        &self.pool
    }

    pub fn get(&self, noun: &str) -> Option<&RankedList> {
        self.lists.get(noun)
    }

    /// 1-based rank of `property` for `noun`.
    pub fn rank(&self, noun: &str, property: &str) -> Option<usize> {
        self.lists.get(noun).and_then(|l| l.rank(property))
    }

    pub fn nouns(&self) -> impl Iterator<Item = &String> {
        self.lists.keys()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &RankedList)> {
        self.lists.iter()
    }

    pub fn len(&self) -> usize {
        self.lists.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lists.is_empty()
    }

    /// Writes JSON Lines `{"noun", "order", "partial"}` in noun-id order.
    pub fn write_jsonl<W: Write>(&self, mut writer: W) -> Result<()> {
        for (noun, list) in &self.lists {
            let line = RankingLine {
                noun: noun.clone(),
                order: list.order.clone(),
                partial: self.partial,
            };
            serde_json::to_writer(&mut writer, &line)?;
            writer.write_all(b"\n").map_err(|e| Error::io("<ranking>", e))?;
        }
        Ok(())
    }

    pub fn to_jsonl_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_jsonl(&mut buf)?;
        Ok(String::from_utf8(buf).expect("json output is utf-8"))
    }

    /// Reads a ranking written by [`Ranking::write_jsonl`]. All lines must
    /// agree on the `partial` flag; full lists must share one pool.
    pub fn read_jsonl<R: BufRead>(model_id: &str, reader: R) -> Result<Self> {
        let mut lists = BTreeMap::new();
        let mut partial = None;
        for (i, line) in reader.lines().enumerate() {
            let lineno = i + 1;
            let line = line.map_err(|e| Error::io("<ranking>", e))?;
            if line.trim().is_empty() {
                continue;
            }
            let parsed: RankingLine =
                serde_json::from_str(&line).map_err(|e| Error::parse("ranking", lineno, e.to_string()))?;
            match partial {
                None => partial = Some(parsed.partial),
                Some(p) if p != parsed.partial => {
                    return Err(Error::parse("ranking", lineno, "mixed partial and full lists"));
                }
                _ => {}
            }
            if lists.insert(parsed.noun.clone(), parsed.order).is_some() {
                return Err(Error::parse(
                    "ranking",
                    lineno,
                    format!("duplicate noun '{}'", parsed.noun),
                ));
            }
        }
        if partial.unwrap_or(false) {
            Ranking::partial(model_id, lists)
        } else {
            let pool: Vec<String> = lists
                .values()
                .next()
                .map(|o| {
                    let mut p = o.clone();
                    p.sort();
                    p
                })
                .unwrap_or_default();
            Ranking::full(model_id, &pool, lists)
        }
    }
}
