//! Acceptance gate. Prints one PASS/FAIL (or SKIP, for criteria gated on
//! external data) line per criterion and exits non-zero on any failure.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use normfuse::concreteness::{
    lcs_len, lookup, spearman, train_predictor, Concreteness, ConcretenessSource, FallbackPolicy, GoldConcreteness,
    DEFAULT_LAMBDA, DEFAULT_SUFFIXES,
};
use normfuse::datamodel::{dataset_stats, GoldSets, NormDataset, Noun, Property, Ranking};
use normfuse::evaluation::{bin_by_concreteness, evaluate, rank_improvement};
use normfuse::fusion::{fuse, sweep, FusionStrategy};
use normfuse::ingest::{
    load_concreteness, load_embeddings, parse_concreteness, parse_norms, ConcretenessTable, EmbedKind, EmbeddingRecord,
    EmbeddingTable, LmScoreRecord, NormsFormat, Provenance, RatingScale,
};
use normfuse::rng::SplitMix64;
use normfuse::scoring::{aggregate_lm, clip_scores, AggregationSpec};

type Outcome = Result<String, String>;
type Criterion = (&'static str, Box<dyn Fn() -> Status>);

enum Status {
    Pass(String),
    Fail(String),
    Skip(String),
}

fn check(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn within(start: Instant, limit: Duration) -> Result<String, String> {
    let t = start.elapsed();
    check(t < limit, format!("took {t:?}, limit {limit:?}"))?;
    Ok(format!("{:.0} ms", t.as_secs_f64() * 1000.0))
}

fn ids(prefix: &str, n: usize) -> Vec<String> {
    (0..n).map(|i| format!("{prefix}{i:02}")).collect()
}

fn shuffled(items: &[String], rng: &mut SplitMix64) -> Vec<String> {
    let mut v = items.to_vec();
    for i in (1..v.len()).rev() {
        let j = rng.below(i as u64 + 1) as usize;
        v.swap(i, j);
    }
    v
}

fn random_ranking(model: &str, nouns: &[String], pool: &[String], rng: &mut SplitMix64) -> Ranking {
    let lists = nouns.iter().map(|n| (n.clone(), shuffled(pool, rng))).collect();
    Ranking::full(model, pool, lists).unwrap()
}

// ---- metric oracle ----

/// Exhaustive oracle: walks every list position and counts hits as integers.
fn oracle_metrics(lists: &BTreeMap<String, Vec<String>>, gold: &GoldSets, ks: &[usize]) -> (Vec<usize>, Vec<f64>, f64) {
    let mut acc_hits = vec![0usize; ks.len()];
    let mut recall_sum = vec![0.0; ks.len()];
    let (mut rr_sum, mut pairs) = (0.0, 0usize);
    for (noun, g) in gold {
        let list = &lists[noun];
        for (ki, &k) in ks.iter().enumerate() {
            let mut hits = 0usize;
            for (pos, p) in list.iter().enumerate() {
                if pos < k && g.contains(p) {
                    hits += 1;
                }
            }
            if hits > 0 {
                acc_hits[ki] += 1;
            }
            recall_sum[ki] += hits as f64 / g.len() as f64;
        }
        for p in g {
            for (pos, q) in list.iter().enumerate() {
                if q == p {
                    rr_sum += 1.0 / (pos + 1) as f64;
                }
            }
            pairs += 1;
        }
    }
    let n = gold.len() as f64;
    (
        acc_hits,
        recall_sum.iter().map(|s| 100.0 * s / n).collect(),
        rr_sum / pairs as f64,
    )
}

fn metric_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = SplitMix64::new(0x5eed_0001);
    for fixture in 0..50 {
        let nn = 1 + rng.below(10) as usize;
        let np = 1 + rng.below(10) as usize;
        let nouns = ids("n", nn);
        let pool = ids("p", np);
        let ranking = random_ranking("m", &nouns, &pool, &mut rng);
        let mut gold = GoldSets::new();
        for n in &nouns {
            let size = 1 + rng.below(np.min(4) as u64) as usize;
            gold.insert(n.clone(), shuffled(&pool, &mut rng).into_iter().take(size).collect());
        }
        let ks: Vec<usize> = (1..=np).collect();
        let lists: BTreeMap<String, Vec<String>> =
            ranking.iter().map(|(n, l)| (n.clone(), l.order().to_vec())).collect();
        let (acc_hits, recall, mrr) = oracle_metrics(&lists, &gold, &ks);
        let rep = evaluate(&ranking, &gold, &ks).map_err(|e| e.to_string())?;
        for (ki, k) in ks.iter().enumerate() {
            let count = (rep.accuracy[k] * nn as f64 / 100.0).round() as usize;
            check(
                count == acc_hits[ki],
                format!("fixture {fixture}: A@{k} count {count} vs {}", acc_hits[ki]),
            )?;
            check(
                (rep.accuracy[k] - 100.0 * acc_hits[ki] as f64 / nn as f64).abs() <= 1e-12,
                format!("fixture {fixture}: A@{k}"),
            )?;
            check(
                (rep.recall[k] - recall[ki]).abs() <= 1e-12,
                format!("fixture {fixture}: R@{k}"),
            )?;
        }
        let got = rep.mrr.ok_or("MRR missing for a full ranking")?;
        check(
            (got - mrr).abs() <= 1e-12,
            format!("fixture {fixture}: MRR {got} vs {mrr}"),
        )?;
        for detail in &rep.per_noun {
            let noun = &detail.noun;
            let hits = gold[noun].iter().filter(|p| lists[noun][..1].contains(p)).count();
            check(detail.hits[&1] == hits, format!("fixture {fixture}: hits of {noun}"))?;
        }
    }
    Ok(format!("50 fixtures, {}", within(start, Duration::from_secs(5))?))
}

// ---- fusion endpoints ----

struct Constant(f64);

impl ConcretenessSource for Constant {
    fn concreteness(&self, word: &str) -> normfuse::Result<Concreteness> {
        Ok(Concreteness {
            score: self.0,
            provenance: Provenance::Gold,
            matched: word.to_string(),
        })
    }
}

fn same_orders(a: &Ranking, b: &Ranking) -> bool {
    a.len() == b.len()
        && a.iter()
            .zip(b.iter())
            .all(|((n, x), (m, y))| n == m && x.order() == y.order())
}

fn cem_endpoints() -> Outcome {
    let start = Instant::now();
    let mut rng = SplitMix64::new(0x5eed_0002);
    let (zero, one) = (Constant(0.0), Constant(1.0));
    for pair in 0..20 {
        let nouns = ids("n", 1 + rng.below(8) as usize);
        let pool = ids("p", 2 + rng.below(15) as usize);
        let text = random_ranking("text", &nouns, &pool, &mut rng);
        let vision = random_ranking("vision", &nouns, &pool, &mut rng);
        let f0 = fuse(&text, &vision, &FusionStrategy::Cem(&zero)).map_err(|e| e.to_string())?;
        let f1 = fuse(&text, &vision, &FusionStrategy::Cem(&one)).map_err(|e| e.to_string())?;
        check(
            same_orders(&f0, &text),
            format!("pair {pair}: c=0 differs from the text ranking"),
        )?;
        check(
            same_orders(&f1, &vision),
            format!("pair {pair}: c=1 differs from the vision ranking"),
        )?;
    }
    Ok(format!("20 pairs, {}", within(start, Duration::from_secs(1))?))
}

fn sweep_endpoints() -> Outcome {
    let mut rng = SplitMix64::new(0x5eed_0003);
    let nouns = ids("n", 8);
    let pool = ids("p", 12);
    let text = random_ranking("text", &nouns, &pool, &mut rng);
    let vision = random_ranking("vision", &nouns, &pool, &mut rng);
    let gold: GoldSets = nouns
        .iter()
        .map(|n| (n.clone(), shuffled(&pool, &mut rng).into_iter().take(3).collect()))
        .collect();
    let ks = [1, 5, 10];
    let points = sweep(&text, &vision, &[0.0, 1.0], &gold, &ks).map_err(|e| e.to_string())?;
    for (point, model) in points.iter().zip([&text, &vision]) {
        let expected = evaluate(model, &gold, &ks).map_err(|e| e.to_string())?;
        // The fused report carries its own model id; every other byte must match.
        let mut got = point.report.clone();
        got.model_id = expected.model_id.clone();
        let a = serde_json::to_vec(&got).unwrap();
        let b = serde_json::to_vec(&expected).unwrap();
        check(
            a == b,
            format!("w={} report differs from {}", point.weight, model.model_id()),
        )?;
    }
    Ok("w=0 and w=1 reports identical to the inputs'".into())
}

// ---- score arithmetic ----

fn one_noun(props: &[&str]) -> NormDataset {
    NormDataset {
        name: "arith".into(),
        nouns: vec![Noun::new("n", "n", "ns")],
        candidates: props.iter().map(|p| Property::new(p)).collect(),
        gold: GoldSets::from([("n".to_string(), BTreeSet::from([props[0].to_string()]))]),
    }
}

fn lm(prop: &str, image: Option<&str>, pieces: Vec<f64>) -> LmScoreRecord {
    LmScoreRecord {
        model_id: "m".into(),
        noun_id: "n".into(),
        property_id: prop.into(),
        prompt_id: "q".into(),
        image_id: image.map(str::to_string),
        piece_logprobs: pieces,
    }
}

fn arithmetic() -> Outcome {
    let spec = AggregationSpec::default();
    let ds = one_noun(&["a"]);
    let m = aggregate_lm(&[lm("a", None, vec![-1.0, -3.0])], &ds, &spec).map_err(|e| e.to_string())?;
    check(m.score(0, 0) == -2.0, format!("piece mean {}", m.score(0, 0)))?;

    let recs = [lm("a", Some("i0"), vec![-1.0]), lm("a", Some("i1"), vec![-2.0])];
    let m = aggregate_lm(&recs, &ds, &spec).map_err(|e| e.to_string())?;
    check(m.score(0, 0) == -1.5, format!("image mean {}", m.score(0, 0)))?;

    let text = [EmbeddingRecord {
        kind: EmbedKind::TextPrompt,
        key: "a".into(),
        noun_id: None,
        vector: vec![1.0, 0.0],
    }];
    let images: Vec<EmbeddingRecord> = [vec![1.0, 0.0], vec![0.0, 1.0]]
        .into_iter()
        .enumerate()
        .map(|(i, v)| EmbeddingRecord {
            kind: EmbedKind::Image,
            key: format!("i{i}"),
            noun_id: Some("n".into()),
            vector: v,
        })
        .collect();
    let m = clip_scores("clip", &text, &images, &ds, &spec).map_err(|e| e.to_string())?;
    check(
        (m.score(0, 0) - 0.5).abs() <= 1e-12,
        format!("mean cosine {}", m.score(0, 0)),
    )?;
    Ok("-2, -1.5, 0.5".into())
}

// ---- concreteness ----

/// LCS by enumerating every subsequence of the shorter word.
fn brute_lcs(a: &str, b: &str) -> usize {
    let (short, long): (Vec<char>, Vec<char>) = if a.chars().count() <= b.chars().count() {
        (a.chars().collect(), b.chars().collect())
    } else {
        (b.chars().collect(), a.chars().collect())
    };
    let is_subseq = |s: &[char]| {
        let mut it = long.iter();
        s.iter().all(|c| it.any(|x| x == c))
    };
    (0u32..1 << short.len())
        .filter_map(|mask| {
            let sub: Vec<char> = (0..short.len())
                .filter(|i| mask >> i & 1 == 1)
                .map(|i| short[i])
                .collect();
            is_subseq(&sub).then_some(sub.len())
        })
        .max()
        .unwrap_or(0)
}

fn random_word(rng: &mut SplitMix64) -> String {
    let len = 1 + rng.below(8) as usize;
    (0..len).map(|_| (b'a' + rng.below(6) as u8) as char).collect()
}

fn concreteness() -> Outcome {
    let table = parse_concreteness(
        "#scale=zero_to_five\nword,score\nsolid,4.0\nsharpen,3.5\nsharp,2.0\n",
        "inline",
    )
    .map_err(|e| e.to_string())?;
    check(
        table.iter().all(|(_, e)| (0.0..=1.0).contains(&e.score)),
        "score outside [0, 1]",
    )?;
    check(
        table.score("solid") == Some(0.8),
        format!("4.0 maps to {:?}", table.score("solid")),
    )?;
    let c = lookup("sharpened", &table, FallbackPolicy::LongestMatch).map_err(|e| e.to_string())?;
    check(
        c.matched == "sharpen" && c.score == 0.7 && c.provenance == Provenance::Fallback,
        format!("sharpened resolved to {c:?}"),
    )?;

    let mut rng = SplitMix64::new(0x5eed_0005);
    let words: BTreeSet<String> = (0..40).map(|_| random_word(&mut rng)).collect();
    let table = ConcretenessTable::from_scores(
        RatingScale::Unit,
        words.iter().enumerate().map(|(i, w)| (w, i as f64 / 40.0)),
    )
    .map_err(|e| e.to_string())?;
    for _ in 0..100 {
        let (a, b) = (random_word(&mut rng), random_word(&mut rng));
        check(lcs_len(&a, &b) == brute_lcs(&a, &b), format!("lcs({a}, {b})"))?;

        let got = lookup(&a, &table, FallbackPolicy::LongestMatch).map_err(|e| e.to_string())?;
        let expected = if words.contains(&a) {
            a.clone()
        } else {
            let prefix = |w: &str| a.chars().zip(w.chars()).take_while(|(x, y)| x == y).count();
            let best = words.iter().map(|w| (brute_lcs(&a, w), prefix(w))).max().unwrap();
            words
                .iter()
                .find(|w| (brute_lcs(&a, w), prefix(w)) == best)
                .unwrap()
                .clone()
        };
        check(
            got.matched == expected,
            format!("fallback for {a}: {} vs {expected}", got.matched),
        )?;
    }
    Ok("4.0 -> 0.8, sharpened -> sharpen (fallback), 100 LCS pairs".into())
}

// ---- predictor recovery ----

/// Gaussian elimination with partial pivoting.
fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        a.swap(col, piv);
        b.swap(col, piv);
        let pivot = a[col].clone();
        for r in col + 1..n {
            let f = a[r][col] / pivot[col];
            for (x, p) in a[r][col..].iter_mut().zip(&pivot[col..]) {
                *x -= f * p;
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| a[r][c] * x[c]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    x
}

fn predictor_recovery() -> Outcome {
    let start = Instant::now();
    let d = 8;
    let lambda = 1e-6;
    let mut rng = SplitMix64::new(0x5eed_0006);
    let mut unit = || rng.next_f64() * 2.0 - 1.0;
    let planted: Vec<f64> = (0..d).map(|_| 0.04 * unit()).collect();
    let suffix_effect = [("", 0.0), ("ous", -0.1), ("ful", 0.05), ("y", 0.08), ("ing", -0.06)];

    let mut words = Vec::new();
    let mut truth = BTreeMap::new();
    let mut vectors = Vec::new();
    for i in 0..200 {
        let (suffix, effect) = suffix_effect[i % suffix_effect.len()];
        let word = format!("w{i:03}{suffix}");
        let v: Vec<f64> = (0..d).map(|_| unit()).collect();
        let c = 0.5 + effect + planted.iter().zip(&v).map(|(a, b)| a * b).sum::<f64>();
        truth.insert(word.clone(), c);
        vectors.push((word.clone(), v));
        words.push(word);
    }
    let ratings = ConcretenessTable::from_scores(RatingScale::Unit, truth.iter().map(|(w, c)| (w.as_str(), *c)))
        .map_err(|e| e.to_string())?;
    let embeds = EmbeddingTable::from_entries(d, vectors.clone()).map_err(|e| e.to_string())?;
    let holdout: BTreeSet<String> = words.iter().step_by(4).cloned().collect();
    let predictor = train_predictor(&ratings, &embeds, &holdout, lambda).map_err(|e| e.to_string())?;

    // Independent normal-equations fit over the same feature layout.
    let train: Vec<&(String, Vec<f64>)> = vectors.iter().filter(|(w, _)| !holdout.contains(w)).collect();
    let n = train.len() as f64;
    let mean: Vec<f64> = (0..d)
        .map(|j| train.iter().map(|(_, v)| v[j]).sum::<f64>() / n)
        .collect();
    let sd: Vec<f64> = (0..d)
        .map(|j| (train.iter().map(|(_, v)| (v[j] - mean[j]).powi(2)).sum::<f64>() / n).sqrt())
        .collect();
    let row = |w: &str, v: &[f64]| -> Vec<f64> {
        let mut x: Vec<f64> = (0..d).map(|j| (v[j] - mean[j]) / sd[j]).collect();
        let hit = DEFAULT_SUFFIXES
            .iter()
            .filter(|s| w.len() > s.len() && w.ends_with(*s))
            .max_by_key(|s| s.len());
        x.extend(DEFAULT_SUFFIXES.iter().map(|s| if Some(s) == hit { 1.0 } else { 0.0 }));
        x.push(1.0); // the single POS tag
        x.push(1.0); // bias
        x
    };
    let p = d + DEFAULT_SUFFIXES.len() + 2;
    let mut gram = vec![vec![0.0; p]; p];
    let mut rhs = vec![0.0; p];
    for (w, v) in &train {
        let x = row(w, v);
        for i in 0..p {
            rhs[i] += x[i] * truth[w];
            for j in 0..p {
                gram[i][j] += x[i] * x[j];
            }
        }
    }
    for (i, r) in gram.iter_mut().enumerate().take(p - 1) {
        r[i] += lambda;
    }
    let w_oracle = solve(gram, rhs);

    let (mut pred, mut gold, mut worst, mut worst_oracle) = (Vec::new(), Vec::new(), 0.0f64, 0.0f64);
    for (w, v) in vectors.iter().filter(|(w, _)| holdout.contains(w)) {
        let got = predictor.predict(&embeds, w).map_err(|e| e.to_string())?;
        let oracle: f64 = row(w, v).iter().zip(&w_oracle).map(|(a, b)| a * b).sum();
        worst = worst.max((got - truth[w]).abs());
        worst_oracle = worst_oracle.max((got - oracle).abs());
        pred.push(got);
        gold.push(truth[w]);
    }
    let rho = spearman(&pred, &gold).map_err(|e| e.to_string())?;
    check(rho >= 0.99, format!("holdout rho {rho}"))?;
    check(worst < 1e-3, format!("max error {worst}"))?;
    check(
        worst_oracle < 1e-6,
        format!("differs from the normal-equations solution by {worst_oracle}"),
    )?;
    Ok(format!(
        "rho {rho:.4}, max error {worst:.1e}, vs oracle {worst_oracle:.1e}, {}",
        within(start, Duration::from_secs(2))?
    ))
}

// ---- rank improvement by concreteness ----

/// One noun whose 100 gold properties have concreteness (j + 0.5) / 100,
/// plus 10 distractors at 0.5. The text model puts every abstract gold
/// property first and the vision model every concrete one; within each
/// block both lists run from most to least concrete.
fn ri_bins() -> Outcome {
    let gold_ids = ids("g", 100);
    let distractors: Vec<String> = (0..10).map(|j| format!("x{j:02}")).collect();
    let conc = |j: usize| (j as f64 + 0.5) / 100.0;
    let mut scores: Vec<(String, f64)> = gold_ids.iter().enumerate().map(|(j, g)| (g.clone(), conc(j))).collect();
    scores.extend(distractors.iter().map(|x| (x.clone(), 0.5)));
    let table = ConcretenessTable::from_scores(RatingScale::Unit, scores).map_err(|e| e.to_string())?;
    let source = GoldConcreteness {
        table: &table,
        policy: FallbackPolicy::None,
    };

    let abstract_block: Vec<String> = gold_ids[..50].iter().rev().cloned().collect();
    let concrete_block: Vec<String> = gold_ids[50..].iter().rev().cloned().collect();
    let text_order = [abstract_block.clone(), distractors.clone(), concrete_block.clone()].concat();
    let vision_order = [concrete_block, distractors, abstract_block].concat();
    let mut pool = text_order.clone();
    pool.sort();
    let text =
        Ranking::full("text", &pool, BTreeMap::from([("n".to_string(), text_order)])).map_err(|e| e.to_string())?;
    let vision =
        Ranking::full("vision", &pool, BTreeMap::from([("n".to_string(), vision_order)])).map_err(|e| e.to_string())?;

    let fused = fuse(&text, &vision, &FusionStrategy::Cem(&source)).map_err(|e| e.to_string())?;
    let pairs: Vec<(String, String)> = gold_ids.iter().map(|g| ("n".to_string(), g.clone())).collect();
    let entries = rank_improvement(&fused, &text, &pairs).map_err(|e| e.to_string())?;
    let report = bin_by_concreteness(&entries, &source, 10).map_err(|e| e.to_string())?;
    let means: Vec<f64> = report.bins.iter().map(|b| b.mean_ri).collect();
    check(means.len() == 10, format!("{} bins", means.len()))?;
    check(
        means.windows(2).all(|w| w[0] < w[1]),
        format!("mean RI not strictly increasing: {means:?}"),
    )?;
    Ok(format!(
        "mean RI {}",
        means.iter().map(|m| format!("{m:.1}")).collect::<Vec<_>>().join(" < ")
    ))
}

// ---- real dataset statistics ----

fn dataset_statistics() -> Status {
    let expected = [
        ("NORMFUSE_FEATURE_NORMS", "Feature Norms", (509, 209, 1592, "3.1")),
        (
            "NORMFUSE_CONCEPT_PROPERTIES",
            "Concept Properties",
            (601, 400, 3983, "6.6"),
        ),
        ("NORMFUSE_MEMORY_COLORS", "Memory Colors", (109, 11, 109, "1.0")),
    ];
    let mut done = Vec::new();
    let mut missing = Vec::new();
    for (var, name, want) in expected {
        let Some(path) = std::env::var_os(var).map(PathBuf::from) else {
            missing.push(var);
            continue;
        };
        let Some(format) = NormsFormat::from_path(&path) else {
            return Status::Fail(format!("{name}: cannot guess the format of {}", path.display()));
        };
        let stats = match parse_norms(&path, format).and_then(|d| dataset_stats(&d)) {
            Ok(s) => s,
            Err(e) => return Status::Fail(format!("{name}: {e}")),
        };
        let got = (
            stats.noun_count,
            stats.property_count,
            stats.pair_count,
            stats.mean_display(),
        );
        if (got.0, got.1, got.2, got.3.as_str()) != want {
            return Status::Fail(format!("{name}: got {got:?}, expected {want:?}"));
        }
        done.push(name);
    }
    if done.is_empty() {
        Status::Skip(format!("set {} to the dataset exports", missing.join(", ")))
    } else if missing.is_empty() {
        Status::Pass(format!("{} match", done.join(", ")))
    } else {
        Status::Pass(format!(
            "{} match; not checked: {}",
            done.join(", "),
            missing.join(", ")
        ))
    }
}

// ---- determinism ----

fn copy_fixtures(dest: &Path) {
    let src = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures");
    for entry in std::fs::read_dir(src).unwrap() {
        let entry = entry.unwrap();
        std::fs::copy(entry.path(), dest.join(entry.file_name())).unwrap();
    }
}

fn pipeline(dir: &Path) -> Result<BTreeMap<String, Vec<u8>>, String> {
    copy_fixtures(dir);
    let steps: &[&[&str]] = &[
        &["ingest", "--dataset", "norms.tsv", "--split-dev", "2"],
        &["aggregate", "--dataset", "norms.tsv", "--records", "text.records.jsonl"],
        &[
            "aggregate",
            "--dataset",
            "norms.tsv",
            "--records",
            "vision.records.jsonl",
        ],
        &["rank", "--matrix", "out/bert.csv"],
        &["rank", "--matrix", "out/clip.csv"],
        &["rank", "--records", "generated.jsonl"],
        &["baseline", "random", "--dataset", "norms.tsv"],
        &["rank", "--matrix", "out/random.csv"],
        &[
            "fuse",
            "--text",
            "out/bert.ranking.jsonl",
            "--vision",
            "out/clip.ranking.jsonl",
        ],
        &[
            "fuse",
            "--text",
            "out/bert.ranking.jsonl",
            "--vision",
            "out/clip.ranking.jsonl",
            "--strategy",
            "random",
            "--name",
            "rnd",
        ],
        &[
            "eval",
            "--dataset",
            "norms.tsv",
            "--ranking",
            "out/bert.ranking.jsonl",
            "--ranking",
            "out/clip.ranking.jsonl",
            "--ranking",
            "out/fused.ranking.jsonl",
            "--ranking",
            "out/rnd.ranking.jsonl",
            "--ranking",
            "out/random.ranking.jsonl",
        ],
        &[
            "analyze",
            "ri",
            "--dataset",
            "norms.tsv",
            "--fused",
            "out/fused.ranking.jsonl",
            "--base",
            "out/bert.ranking.jsonl",
        ],
        &[
            "analyze",
            "bins",
            "--dataset",
            "norms.tsv",
            "--fused",
            "out/fused.ranking.jsonl",
            "--base",
            "out/bert.ranking.jsonl",
            "--nbins",
            "3",
        ],
        &[
            "analyze",
            "bands",
            "--dataset",
            "norms.tsv",
            "--ranking",
            "out/bert.ranking.jsonl",
            "--ranking",
            "out/clip.ranking.jsonl",
        ],
        &[
            "analyze",
            "duplicates",
            "--ranking",
            "out/bert.ranking.jsonl",
            "--ranking",
            "out/clip.ranking.jsonl",
        ],
        &[
            "sweep",
            "--dataset",
            "norms.tsv",
            "--text",
            "out/bert.ranking.jsonl",
            "--vision",
            "out/clip.ranking.jsonl",
        ],
    ];
    for step in steps {
        let out = Command::new(env!("CARGO_BIN_EXE_normfuse"))
            .args(["--config", "run.cfg"])
            .args(*step)
            .current_dir(dir)
            .env("NORMFUSE_LOG", "error")
            .output()
            .map_err(|e| e.to_string())?;
        if !out.status.success() {
            return Err(format!("{step:?}: {}", String::from_utf8_lossy(&out.stderr).trim()));
        }
    }
    let mut files = BTreeMap::new();
    for entry in std::fs::read_dir(dir.join("out")).map_err(|e| e.to_string())? {
        let entry = entry.map_err(|e| e.to_string())?;
        files.insert(
            entry.file_name().to_string_lossy().into_owned(),
            std::fs::read(entry.path()).map_err(|e| e.to_string())?,
        );
    }
    Ok(files)
}

fn determinism() -> Outcome {
    let a = tempfile::tempdir().map_err(|e| e.to_string())?;
    let b = tempfile::tempdir().map_err(|e| e.to_string())?;
    let first = pipeline(a.path())?;
    let second = pipeline(b.path())?;
    check(first.keys().eq(second.keys()), "the two runs wrote different file sets")?;
    for (name, bytes) in &first {
        check(second[name] == *bytes, format!("{name} differs between runs"))?;
    }
    Ok(format!("{} output files byte-identical", first.len()))
}

// ---- optional predictor reproduction ----

fn predictor_reproduction() -> Status {
    let vars = ["NORMFUSE_RATINGS", "NORMFUSE_FASTTEXT", "NORMFUSE_HOLDOUT"];
    let paths: Vec<Option<PathBuf>> = vars.iter().map(|v| std::env::var_os(v).map(PathBuf::from)).collect();
    let [Some(ratings), Some(vectors), Some(holdout)] = &paths[..] else {
        return Status::Skip(format!("set {} to run", vars.join(", ")));
    };
    let run = || -> Result<f64, String> {
        let ratings = load_concreteness(ratings).map_err(|e| e.to_string())?;
        let embeds = load_embeddings(vectors).map_err(|e| e.to_string())?;
        let holdout: BTreeSet<String> = std::fs::read_to_string(holdout)
            .map_err(|e| e.to_string())?
            .lines()
            .map(normfuse::datamodel::normalize_id)
            .filter(|w| !w.is_empty())
            .collect();
        let predictor = train_predictor(&ratings, &embeds, &holdout, DEFAULT_LAMBDA).map_err(|e| e.to_string())?;
        let (mut pred, mut gold) = (Vec::new(), Vec::new());
        for w in &holdout {
            if let (Some(g), Ok(p)) = (ratings.score(w), predictor.predict(&embeds, w)) {
                gold.push(g);
                pred.push(p);
            }
        }
        spearman(&pred, &gold).map_err(|e| e.to_string())
    };
    match run() {
        Ok(rho) if (rho - 0.76).abs() <= 0.05 => Status::Pass(format!("holdout rho {rho:.3}")),
        Ok(rho) => Status::Fail(format!("holdout rho {rho:.3}, expected 0.76 +/- 0.05")),
        Err(e) => Status::Fail(e),
    }
}

fn main() {
    let criteria: Vec<Criterion> = vec![
        ("metric oracle equivalence", Box::new(|| metric_oracle().into_status())),
        ("fusion endpoints", Box::new(|| cem_endpoints().into_status())),
        ("sweep endpoints", Box::new(|| sweep_endpoints().into_status())),
        ("score arithmetic", Box::new(|| arithmetic().into_status())),
        (
            "concreteness normalization and fallback",
            Box::new(|| concreteness().into_status()),
        ),
        ("predictor recovery", Box::new(|| predictor_recovery().into_status())),
        (
            "rank improvement rises with concreteness",
            Box::new(|| ri_bins().into_status()),
        ),
        ("dataset statistics", Box::new(dataset_statistics)),
        ("pipeline determinism", Box::new(|| determinism().into_status())),
        (
            "predictor reproduction on real ratings",
            Box::new(predictor_reproduction),
        ),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        match run() {
            Status::Pass(d) => println!("PASS  {name}: {d}"),
            Status::Skip(d) => println!("SKIP  {name}: {d}"),
            Status::Fail(d) => {
                failed += 1;
                println!("FAIL  {name}: {d}");
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}

trait IntoStatus {
    fn into_status(self) -> Status;
}

impl IntoStatus for Outcome {
    fn into_status(self) -> Status {
        match self {
            Ok(d) => Status::Pass(d),
            Err(d) => Status::Fail(d),
        }
    }
}
