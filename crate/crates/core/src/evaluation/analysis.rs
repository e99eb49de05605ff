use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::metrics::{accuracy_at_k, evaluate, MetricReport};
use crate::concreteness::ConcretenessSource;
use crate::datamodel::{GoldSets, NormDataset, Ranking};
use crate::error::{Error, Result};
use crate::ingest::{LmScoreRecord, NgramTable};
use crate::rng::SplitMix64;

/// Rank change of one gold pair between a base and a fused ranking.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RiEntry {
    pub noun: String,
    pub property: String,
    pub base_rank: usize,
    pub fused_rank: usize,
    /// `base_rank - fused_rank`: positive when fusion moved the property up.
    pub ri: i64,
}

pub fn rank_improvement(fused: &Ranking, base: &Ranking, pairs: &[(String, String)]) -> Result<Vec<RiEntry>> {
    if fused.is_partial() || base.is_partial() {
        return Err(Error::InvalidArgument("rank improvement needs full rankings".into()));
    }
    if fused.pool() != base.pool() {
        return Err(Error::Mismatch(
            "the two rankings have different candidate pools".into(),
        ));
    }
    pairs
        .iter()
        .map(|(noun, property)| {
            let missing = || Error::Missing(format!("no rank for pair ({noun}, {property})"));
            let fused_rank = fused.rank(noun, property).ok_or_else(missing)?;
            let base_rank = base.rank(noun, property).ok_or_else(missing)?;
            Ok(RiEntry {
                noun: noun.clone(),
                property: property.clone(),
                base_rank,
                fused_rank,
                ri: base_rank as i64 - fused_rank as i64,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bin {
    pub properties: Vec<String>,
    pub mean_concreteness: f64,
    pub pair_count: usize,
    pub mean_ri: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinReport {
    pub bins: Vec<Bin>,
}

/// Sizes of `nbins` contiguous bins over `n` items; the first `n % nbins`
/// bins get one extra item.
pub fn bin_sizes(n: usize, nbins: usize) -> Vec<usize> {
    (0..nbins).map(|i| n / nbins + usize::from(i < n % nbins)).collect()
}

/// Groups the distinct properties of `entries` into `nbins` bins of
/// ascending concreteness and averages RI over each bin's pairs.
pub fn bin_by_concreteness(entries: &[RiEntry], source: &dyn ConcretenessSource, nbins: usize) -> Result<BinReport> {
    if nbins == 0 {
        return Err(Error::InvalidArgument("the number of bins must be at least 1".into()));
    }
    let mut by_property: BTreeMap<&str, Vec<i64>> = BTreeMap::new();
    for e in entries {
        by_property.entry(&e.property).or_default().push(e.ri);
    }
    if by_property.len() < nbins {
        return Err(Error::InvalidArgument(format!(
            "{} properties cannot fill {nbins} bins",
            by_property.len()
        )));
    }
    let mut scored = by_property
        .into_iter()
        .map(|(p, ris)| Ok((source.concreteness(p)?.score, p, ris)))
        .collect::<Result<Vec<_>>>()?;
    scored.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(b.1)));

    let mut bins = Vec::with_capacity(nbins);
    let mut rest = scored.as_slice();
    for size in bin_sizes(rest.len(), nbins) {
        let (chunk, tail) = rest.split_at(size);
        rest = tail;
        let pair_count: usize = chunk.iter().map(|(_, _, r)| r.len()).sum();
        let ri_sum: i64 = chunk.iter().flat_map(|(_, _, r)| r).sum();
        bins.push(Bin {
            properties: chunk.iter().map(|(_, p, _)| p.to_string()).collect(),
            mean_concreteness: chunk.iter().map(|(c, _, _)| c).sum::<f64>() / size as f64,
            pair_count,
            mean_ri: ri_sum as f64 / pair_count as f64,
        });
    }
    Ok(BinReport { bins })
}

/// Which single gold property each noun keeps in the band experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Band {
    Most,
    Least,
    Random,
}

impl FromStr for Band {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "most" => Ok(Self::Most),
            "least" => Ok(Self::Least),
            "random" => Ok(Self::Random),
            other => Err(Error::InvalidArgument(format!(
                "unknown band '{other}' (expected most, least or random)"
            ))),
        }
    }
}

impl fmt::Display for Band {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Most => "most",
            Self::Least => "least",
            Self::Random => "random",
        })
    }
}

/// Reduces the gold of every noun with at least two gold properties to one
/// property: the most or least concrete (ties to the smaller id), or a
/// uniform draw from `rng`. Nouns with a single gold property are dropped.
pub fn select_band_gold(
    gold: &GoldSets,
    source: &dyn ConcretenessSource,
    band: Band,
    rng: &mut SplitMix64,
) -> Result<GoldSets> {
    let mut out = GoldSets::new();
    for (noun, props) in gold {
        if props.len() < 2 {
            continue;
        }
        let pick = match band {
            Band::Random => props
                .iter()
                .nth(rng.below(props.len() as u64) as usize)
                .unwrap()
                .clone(),
            Band::Most | Band::Least => {
                let mut best: Option<(f64, &String)> = None;
                for p in props {
                    let c = source.concreteness(p)?.score;
                    let better = match best {
                        None => true,
                        Some((b, _)) if band == Band::Most => c > b,
                        Some((b, _)) => c < b,
                    };
                    if better {
                        best = Some((c, p));
                    }
                }
                best.unwrap().1.clone()
            }
        };
        out.insert(noun.clone(), BTreeSet::from([pick]));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandStat {
    pub per_trial: Vec<f64>,
    pub mean: f64,
    /// Sample standard deviation over trials (0 for a single trial).
    pub sd: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandReport {
    pub band: Band,
    pub eligible_nouns: usize,
    pub trials: usize,
    pub models: BTreeMap<String, BandStat>,
}

/// Top-1 accuracy of each model when every noun keeps only one gold
/// property chosen by `band`. Random bands draw a fresh choice per trial,
/// shared by all models; the other bands run once.
pub fn band_experiment(
    gold: &GoldSets,
    rankings: &BTreeMap<String, Ranking>,
    source: &dyn ConcretenessSource,
    band: Band,
    trials: usize,
    seed: u64,
) -> Result<BandReport> {
    if trials == 0 {
        return Err(Error::InvalidArgument(
            "the band experiment needs at least one trial".into(),
        ));
    }
    let trials = if band == Band::Random { trials } else { 1 };
    let mut rng = SplitMix64::new(seed);
    let mut per_model: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    let mut eligible = 0;
    for _ in 0..trials {
        let reduced = select_band_gold(gold, source, band, &mut rng)?;
        if reduced.is_empty() {
            return Err(Error::InvalidArgument("no noun has two or more gold properties".into()));
        }
        eligible = reduced.len();
        for (model, ranking) in rankings {
            per_model
                .entry(model.clone())
                .or_default()
                .push(accuracy_at_k(ranking, &reduced, 1)?);
        }
    }
    let models = per_model
        .into_iter()
        .map(|(m, xs)| {
            let n = xs.len() as f64;
            let mean = xs.iter().sum::<f64>() / n;
            let sd = if xs.len() > 1 {
                (xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0)).sqrt()
            } else {
                0.0
            };
            (
                m,
                BandStat {
                    per_trial: xs,
                    mean,
                    sd,
                },
            )
        })
        .collect();
    Ok(BandReport {
        band,
        eligible_nouns: eligible,
        trials,
        models,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DuplicateGroup {
    pub top: Vec<String>,
    pub nouns: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DuplicateReport {
    pub k: usize,
    /// Nouns whose ordered top K is shared with at least one other noun.
    pub count: usize,
    pub groups: Vec<DuplicateGroup>,
}

pub fn duplicate_topk(ranking: &Ranking, k: usize) -> Result<DuplicateReport> {
    if k == 0 {
        return Err(Error::InvalidArgument("K must be at least 1".into()));
    }
    let mut by_top: BTreeMap<&[String], Vec<String>> = BTreeMap::new();
    for (noun, list) in ranking.iter() {
        by_top.entry(list.top(k)).or_default().push(noun.clone());
    }
    let mut groups: Vec<DuplicateGroup> = by_top
        .into_iter()
        .filter(|(_, nouns)| nouns.len() > 1)
        .map(|(top, nouns)| DuplicateGroup {
            top: top.to_vec(),
            nouns,
        })
        .collect();
    groups.sort_by(|a, b| a.nouns[0].cmp(&b.nouns[0]));
    Ok(DuplicateReport {
        k,
        count: groups.iter().map(|g| g.nouns.len()).sum(),
        groups,
    })
}

/// Evaluation over a subset of the gold pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsetReport {
    pub pair_count: usize,
    /// Nouns left without gold after restriction.
    pub dropped_nouns: usize,
    /// `None` when the subset is empty.
    pub report: Option<MetricReport>,
}

fn restricted_eval<F>(ranking: &Ranking, gold: &GoldSets, ks: &[usize], keep: F) -> Result<SubsetReport>
where
    F: Fn(&str, &str) -> bool,
{
    let mut restricted = GoldSets::new();
    let mut dropped = 0;
    for (noun, props) in gold {
        let kept: BTreeSet<String> = props.iter().filter(|p| keep(noun, p)).cloned().collect();
        if kept.is_empty() {
            dropped += usize::from(!props.is_empty());
        } else {
            restricted.insert(noun.clone(), kept);
        }
    }
    let pair_count = restricted.values().map(BTreeSet::len).sum();
    let report = if restricted.is_empty() {
        None
    } else {
        Some(evaluate(ranking, &restricted, ks)?)
    };
    Ok(SubsetReport {
        pair_count,
        dropped_nouns: dropped,
        report,
    })
}

/// Wordpiece counts per model and property, read off LM records.
pub fn piece_counts_from_records(records: &[LmScoreRecord]) -> Result<BTreeMap<String, BTreeMap<String, usize>>> {
    let mut out: BTreeMap<String, BTreeMap<String, usize>> = BTreeMap::new();
    for r in records {
        let k = r.piece_count();
        let prev = *out
            .entry(r.model_id.clone())
            .or_default()
            .entry(r.property_id.clone())
            .or_insert(k);
        if prev != k {
            return Err(Error::Mismatch(format!(
                "model '{}' splits '{}' into both {prev} and {k} pieces",
                r.model_id, r.property_id
            )));
        }
    }
    Ok(out)
}

/// Metrics over gold pairs whose property the model splits into more than
/// one piece. Properties without a piece count are treated as single-piece.
pub fn multipiece_eval(
    ranking: &Ranking,
    gold: &GoldSets,
    piece_counts: &BTreeMap<String, usize>,
    ks: &[usize],
) -> Result<SubsetReport> {
    restricted_eval(ranking, gold, ks, |_, p| piece_counts.get(p).is_some_and(|&k| k > 1))
}

/// Metrics with gold restricted to `subset`. Every subset pair must be gold.
pub fn subset_eval(
    ranking: &Ranking,
    gold: &GoldSets,
    subset: &[(String, String)],
    ks: &[usize],
) -> Result<SubsetReport> {
    for (noun, property) in subset {
        if !gold.get(noun).is_some_and(|g| g.contains(property)) {
            return Err(Error::Mismatch(format!(
                "subset pair ({noun}, {property}) is not a gold pair"
            )));
        }
    }
    let keep: BTreeSet<(&str, &str)> = subset.iter().map(|(n, p)| (n.as_str(), p.as_str())).collect();
    restricted_eval(ranking, gold, ks, |n, p| keep.contains(&(n, p)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyReport {
    pub k: usize,
    pub predictions: usize,
    pub mean_unigram: f64,
    pub mean_bigram: f64,
}

/// Mean corpus frequency of every noun's top-K predictions: the property
/// unigram, and the bigram `<property> <noun singular>`. Absent entries
/// count as 0.
pub fn prediction_frequency(
    ranking: &Ranking,
    k: usize,
    ngrams: &NgramTable,
    dataset: &NormDataset,
) -> Result<FrequencyReport> {
    if k == 0 {
        return Err(Error::InvalidArgument("K must be at least 1".into()));
    }
    let (mut uni, mut bi, mut n) = (0u128, 0u128, 0usize);
    for (noun, list) in ranking.iter() {
        let singular = dataset.noun(noun).map_or(noun.as_str(), |x| x.singular.as_str());
        for p in list.top(k) {
            let surface = dataset.property(p).map_or(p.as_str(), |x| x.surface.as_str());
            uni += u128::from(ngrams.unigram(surface));
            bi += u128::from(ngrams.bigram(surface, singular));
            n += 1;
        }
    }
    let mean = |s: u128| if n == 0 { 0.0 } else { s as f64 / n as f64 };
    Ok(FrequencyReport {
        k,
        predictions: n,
        mean_unigram: mean(uni),
        mean_bigram: mean(bi),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::concreteness::{FallbackPolicy, GoldConcreteness};
    use crate::ingest::{ConcretenessTable, RatingScale};

    fn ids(xs: &[&str]) -> Vec<String> {
        xs.iter().map(|s| s.to_string()).collect()
    }

    fn full(lists: &[(&str, &[&str])]) -> Ranking {
        let mut pool = ids(lists[0].1);
        pool.sort();
        Ranking::full("m", &pool, lists.iter().map(|(n, o)| (n.to_string(), ids(o))).collect()).unwrap()
    }

    fn gold(entries: &[(&str, &[&str])]) -> GoldSets {
        entries
            .iter()
            .map(|(n, ps)| (n.to_string(), ps.iter().map(|p| p.to_string()).collect()))
            .collect()
    }

    #[test]
    fn ri_sign_and_antisymmetry() {
        let order: Vec<String> = (0..10).map(|i| format!("p{i}")).collect();
        let mut swapped = order.clone();
        swapped.swap(1, 9); // p9 at rank 2, p1 at rank 10
        let base = Ranking::full("b", &order, [("n".to_string(), swapped)].into()).unwrap();
        let fused = Ranking::full("f", &order, [("n".to_string(), order.clone())].into()).unwrap();
        let pairs = vec![("n".to_string(), "p1".to_string()), ("n".to_string(), "p9".to_string())];
        let ri = rank_improvement(&fused, &base, &pairs).unwrap();
        assert_eq!(ri[0].ri, 8);
        assert_eq!(ri[1].ri, -8);
        let back = rank_improvement(&base, &fused, &pairs).unwrap();
        assert!(ri.iter().zip(&back).all(|(a, b)| a.ri == -b.ri));
        assert!(rank_improvement(&fused, &fused, &pairs)
            .unwrap()
            .iter()
            .all(|e| e.ri == 0));
    }

    #[test]
    fn bin_sizes_remainder_first() {
        assert_eq!(bin_sizes(7, 3), vec![3, 2, 2]);
        assert_eq!(bin_sizes(400, 10), vec![40; 10]);
    }

    #[test]
    fn bins_sort_by_concreteness() {
        let table =
            ConcretenessTable::from_scores(RatingScale::Unit, vec![("a", 0.9), ("b", 0.1), ("c", 0.5), ("d", 0.2)])
                .unwrap();
        let src = GoldConcreteness {
            table: &table,
            policy: FallbackPolicy::None,
        };
        let e = |p: &str, ri: i64| RiEntry {
            noun: "n".into(),
            property: p.into(),
            base_rank: 1,
            fused_rank: 1,
            ri,
        };
        let entries = vec![e("a", 4), e("b", -2), e("c", 1), e("d", 0), e("a", 2)];
        let rep = bin_by_concreteness(&entries, &src, 2).unwrap();
        assert_eq!(rep.bins[0].properties, ids(&["b", "d"]));
        assert_eq!(rep.bins[0].mean_ri, -1.0);
        assert_eq!(rep.bins[1].properties, ids(&["c", "a"]));
        assert_eq!(rep.bins[1].mean_ri, 7.0 / 3.0);
        assert!((rep.bins[1].mean_concreteness - 0.7).abs() < 1e-12);
        assert!(bin_by_concreteness(&entries, &src, 5).is_err());
        assert!(bin_by_concreteness(&entries, &src, 0).is_err());
    }

    #[test]
    fn band_most_and_least() {
        let table = ConcretenessTable::from_scores(
            RatingScale::Unit,
            vec![("yellow", 0.9), ("annoying", 0.3), ("red", 0.5), ("round", 0.5)],
        )
        .unwrap();
        let src = GoldConcreteness {
            table: &table,
            policy: FallbackPolicy::None,
        };
        let g = gold(&[
            ("dandelion", &["yellow", "annoying"]),
            ("ball", &["red", "round"]),
            ("x", &["red"]),
        ]);
        let mut rng = SplitMix64::new(0);
        let most = select_band_gold(&g, &src, Band::Most, &mut rng).unwrap();
        assert_eq!(most["dandelion"], BTreeSet::from(["yellow".to_string()]));
        assert_eq!(most["ball"], BTreeSet::from(["red".to_string()]));
        assert!(!most.contains_key("x"));
        let least = select_band_gold(&g, &src, Band::Least, &mut rng).unwrap();
        assert_eq!(least["dandelion"], BTreeSet::from(["annoying".to_string()]));
        assert_eq!(least["ball"], BTreeSet::from(["red".to_string()]));
    }

    #[test]
    fn band_random_statistics() {
        let table = ConcretenessTable::from_scores(RatingScale::Unit, vec![("a", 0.9), ("b", 0.1)]).unwrap();
        let src = GoldConcreteness {
            table: &table,
            policy: FallbackPolicy::None,
        };
        let g = gold(&[("n", &["a", "b"])]);
        let r = full(&[("n", &["a", "b"])]);
        let models = BTreeMap::from([("m".to_string(), r)]);
        let rep = band_experiment(&g, &models, &src, Band::Random, 1000, 42).unwrap();
        let stat = &rep.models["m"];
        assert_eq!(stat.per_trial.len(), 1000);
        assert!(stat.per_trial.iter().all(|&x| x == 0.0 || x == 100.0));
        // Each trial is a fair coin: mean 50, sd about 50.
        assert!((stat.mean - 50.0).abs() < 5.0, "mean {}", stat.mean);
        assert!((stat.sd - 50.0).abs() < 2.0, "sd {}", stat.sd);
        let once = band_experiment(&g, &models, &src, Band::Most, 10, 42).unwrap();
        assert_eq!(
            (once.trials, once.models["m"].mean, once.models["m"].sd),
            (1, 100.0, 0.0)
        );
        assert!(band_experiment(&g, &models, &src, Band::Random, 0, 42).is_err());
    }

    #[test]
    fn duplicates_group_nouns() {
        let r = full(&[
            ("a", &["x", "y", "z"]),
            ("b", &["x", "y", "z"]),
            ("c", &["y", "x", "z"]),
        ]);
        let rep = duplicate_topk(&r, 2).unwrap();
        assert_eq!(rep.count, 2);
        assert_eq!(
            rep.groups,
            vec![DuplicateGroup {
                top: ids(&["x", "y"]),
                nouns: ids(&["a", "b"])
            }]
        );
        assert_eq!(duplicate_topk(&r, 1).unwrap().count, 2);
        let distinct = full(&[("a", &["x", "y"]), ("b", &["y", "x"])]);
        assert_eq!(duplicate_topk(&distinct, 1).unwrap().count, 0);
    }

    #[test]
    fn subset_and_multipiece() {
        let r = full(&[("a", &["x", "y", "z"]), ("b", &["z", "y", "x"])]);
        let g = gold(&[("a", &["x", "z"]), ("b", &["y"])]);
        let rep = subset_eval(&r, &g, &[("a".into(), "x".into())], &[1]).unwrap();
        assert_eq!(rep.dropped_nouns, 1);
        let m = rep.report.unwrap();
        assert_eq!((m.accuracy[&1], m.mrr), (100.0, Some(1.0)));
        assert!(subset_eval(&r, &g, &[("a".into(), "y".into())], &[1]).is_err());
        let all: Vec<_> = g
            .iter()
            .flat_map(|(n, ps)| ps.iter().map(|p| (n.clone(), p.clone())))
            .collect();
        assert_eq!(
            subset_eval(&r, &g, &all, &[1, 2]).unwrap().report.unwrap(),
            evaluate(&r, &g, &[1, 2]).unwrap()
        );

        let single = BTreeMap::from([("x".to_string(), 1), ("y".to_string(), 1), ("z".to_string(), 1)]);
        assert_eq!(multipiece_eval(&r, &g, &single, &[1]).unwrap().report, None);
        let counts = BTreeMap::from([("z".to_string(), 2), ("y".to_string(), 3)]);
        let mp = multipiece_eval(&r, &g, &counts, &[1]).unwrap();
        assert_eq!(mp.pair_count, 2);
        let m = mp.report.unwrap();
        // z at rank 3 for a, y at rank 2 for b
        assert_eq!(m.mrr, Some((1.0 / 3.0 + 0.5) / 2.0));
    }

    #[test]
    fn piece_counts_must_agree() {
        let rec = |noun: &str, k: usize| LmScoreRecord {
            model_id: "m".into(),
            noun_id: noun.into(),
            property_id: "colorful".into(),
            prompt_id: "p".into(),
            image_id: None,
            piece_logprobs: vec![-1.0; k],
        };
        let counts = piece_counts_from_records(&[rec("a", 2), rec("b", 2)]).unwrap();
        assert_eq!(counts["m"]["colorful"], 2);
        assert!(piece_counts_from_records(&[rec("a", 2), rec("b", 1)]).is_err());
    }

    #[test]
    fn frequency_means() {
        let mut ds = NormDataset {
            name: "t".into(),
            nouns: vec![crate::datamodel::Noun::new("apple", "apple", "apples")],
            candidates: vec![
                crate::datamodel::Property::new("red"),
                crate::datamodel::Property::new("sweet"),
            ],
            gold: GoldSets::new(),
        };
        ds.gold.insert("apple".into(), BTreeSet::from(["red".to_string()]));
        let r = full(&[("apple", &["red", "sweet"])]);
        let mut ng = NgramTable::default();
        let zero = prediction_frequency(&r, 2, &ng, &ds).unwrap();
        assert_eq!((zero.mean_unigram, zero.mean_bigram), (0.0, 0.0));
        ng.insert_unigram("red", 10);
        ng.insert_unigram("sweet", 20);
        ng.insert_bigram("red", "apple", 8);
        let f = prediction_frequency(&r, 2, &ng, &ds).unwrap();
        assert_eq!((f.predictions, f.mean_unigram, f.mean_bigram), (2, 15.0, 4.0));
    }
}
