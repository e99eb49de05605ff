//! Rankings from score matrices, and rank-level fusion of a text-model
//! ranking with a vision-model ranking.
//!
//! For every noun and property the fused key is an interpolation of the two
//! 1-based ranks,
//!
//! ```text
//! key = (1 - c) * rank_text + c * rank_vision
//! ```
//!
//! where `c` is the property's concreteness (CEM), a fixed weight, or a seeded
//! random draw. The average, max and min variants combine the two ranks
//! directly. Properties are then sorted by ascending key, ties by id.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::concreteness::ConcretenessSource;
use crate::datamodel::{GoldSets, Ranking, ScoreMatrix};
use crate::error::{Error, Result};
use crate::evaluation::{evaluate, MetricReport};
use crate::rng::{derive_seed, SplitMix64};

/// Orders each noun's properties by decreasing score. Sentinel cells go
/// last; ties are broken by ascending property id.
pub fn rank(matrix: &ScoreMatrix) -> Ranking {
    let props = matrix.property_ids();
    let mut lists = BTreeMap::new();
    for (i, noun) in matrix.noun_ids().iter().enumerate() {
        let mut idx: Vec<usize> = (0..props.len()).collect();
        idx.sort_by(|&a, &b| {
            matrix
                .is_sentinel(i, a)
                .cmp(&matrix.is_sentinel(i, b))
                .then_with(|| matrix.score(i, b).total_cmp(&matrix.score(i, a)))
                .then_with(|| props[a].cmp(&props[b]))
        });
        lists.insert(noun.clone(), idx.into_iter().map(|j| props[j].clone()).collect());
    }
    Ranking::full(matrix.model_id(), props, lists).expect("matrix ids are unique, so every row is a permutation")
}

/// How two rankings are combined.
#[derive(Clone, Copy)]
pub enum FusionStrategy<'a> {
    /// Per-property concreteness weight.
    Cem(&'a dyn ConcretenessSource),
    /// One weight for every property; 0 keeps the text ranking, 1 the vision ranking.
    Fixed(f64),
    /// Per-property weight drawn uniformly from `[0, 1)`, seeded by property id.
    Random(u64),
    Average,
    Max,
    Min,
}

impl<'a> FusionStrategy<'a> {
    pub fn fixed(weight: f64) -> Result<Self> {
        check_weight(weight)?;
        Ok(Self::Fixed(weight))
    }

    /// Short name used in fused model ids: `cem`, `fixed:0.3`, `random:7`, ...
    pub fn label(&self) -> String {
        match self {
            Self::Cem(_) => "cem".into(),
            Self::Fixed(w) => format!("fixed:{w}"),
            Self::Random(seed) => format!("random:{seed}"),
            Self::Average => "average".into(),
            Self::Max => "max".into(),
            Self::Min => "min".into(),
        }
    }

    fn weight(&self, property: &str) -> Result<Option<f64>> {
        Ok(match self {
            Self::Cem(source) => Some(source.concreteness(property)?.score),
            Self::Fixed(w) => Some(*w),
            Self::Random(seed) => Some(SplitMix64::new(derive_seed(*seed, property)).next_f64()),
            Self::Average => Some(0.5),
            Self::Max | Self::Min => None,
        })
    }
}

impl fmt::Debug for FusionStrategy<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

fn check_weight(w: f64) -> Result<()> {
    if (0.0..=1.0).contains(&w) {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("fusion weight {w} is outside [0, 1]")))
    }
}

/// Fuses a text ranking with a vision ranking. Both must be full rankings
/// over the same pool and noun set.
pub fn fuse(lm: &Ranking, vis: &Ranking, strategy: &FusionStrategy<'_>) -> Result<Ranking> {
    if lm.is_partial() || vis.is_partial() {
        return Err(Error::InvalidArgument("partial rankings cannot be fused".into()));
    }
    if lm.pool() != vis.pool() {
        return Err(Error::Mismatch(
            "the two rankings have different candidate pools".into(),
        ));
    }
    if !lm.nouns().eq(vis.nouns()) {
        return Err(Error::Mismatch("the two rankings cover different nouns".into()));
    }
    if let FusionStrategy::Fixed(w) = strategy {
        check_weight(*w)?;
    }

    let pool = lm.pool();
    let weights = pool
        .iter()
        .map(|p| {
            let w = strategy.weight(p)?;
            if let Some(c) = w {
                check_weight(c)?;
            }
            Ok(w)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut lists = BTreeMap::new();
    for (noun, text) in lm.iter() {
        let vision = vis.get(noun).expect("noun sets were checked");
        let mut keyed: Vec<(f64, &String)> = pool
            .iter()
            .zip(&weights)
            .map(|(p, w)| {
                let a = text.rank(p).expect("full ranking") as f64;
                let b = vision.rank(p).expect("full ranking") as f64;
                let key = match (strategy, w) {
                    (FusionStrategy::Max, _) => a.max(b),
                    (FusionStrategy::Min, _) => a.min(b),
                    (_, Some(c)) => (1.0 - c) * a + c * b,
                    (_, None) => unreachable!("only max and min have no weight"),
                };
                (key, p)
            })
            .collect();
        keyed.sort_by(|x, y| x.0.total_cmp(&y.0).then_with(|| x.1.cmp(y.1)));
        lists.insert(noun.clone(), keyed.into_iter().map(|(_, p)| p.clone()).collect());
    }

    let model_id = format!("{}({},{})", strategy.label(), lm.model_id(), vis.model_id());
    Ranking::full(&model_id, pool, lists)
}

/// The weight grid 0.0, 0.1, ..., 1.0.
pub fn default_sweep_weights() -> Vec<f64> {
    (0..=10).map(|i| i as f64 / 10.0).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub weight: f64,
    pub report: MetricReport,
}

/// Evaluates fixed-weight fusion at every weight.
pub fn sweep(lm: &Ranking, vis: &Ranking, weights: &[f64], gold: &GoldSets, ks: &[usize]) -> Result<Vec<SweepPoint>> {
    for &w in weights {
        check_weight(w)?;
    }
    weights
        .iter()
        .map(|&w| {
            let fused = fuse(lm, vis, &FusionStrategy::Fixed(w))?;
            Ok(SweepPoint {
                weight: w,
                report: evaluate(&fused, gold, ks)?,
            })
        })
        .collect()
}
