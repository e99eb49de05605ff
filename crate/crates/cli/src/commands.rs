use std::collections::{BTreeMap, BTreeSet};
use std::io::BufReader;
use std::path::Path;
use std::str::FromStr;

use anyhow::{anyhow, bail, ensure, Context, Result};
use normfuse::concreteness::{
    lookup, spearman, train_predictor, Concreteness, ConcretenessPredictor, ConcretenessSource, FallbackPolicy,
    PredictedConcreteness,
};
use normfuse::datamodel::{
    dataset_stats, normalize_id, validate_dataset, MatrixMeta, NormDataset, Ranking, ScoreMatrix,
};
use normfuse::evaluation::{evaluate, MetricReport};
use normfuse::fusion::{self, default_sweep_weights, FusionStrategy};
use normfuse::ingest::{
    format_norms, load_concreteness, load_embeddings, load_ngrams, load_records, parse_norms, ConcretenessTable,
    EmbedKind, EmbeddingTable, NormsFormat, Record,
};
use normfuse::plot::{line_chart, Series};
use normfuse::report;
use normfuse::scoring::{self, aggregate_lm, clip_scores, AggregationSpec, MissingPolicy};
use serde::Serialize;

use crate::run::Run;
use crate::{
    AggregateArgs, BaselineCommand, Common, ConcretenessCommand, DatasetArg, EvalArgs, FuseArgs, IngestArgs, RankArgs,
    SourceArgs, SweepArgs,
};

// ---- shared loaders ----

pub fn new_run(command: &str, args: Vec<String>, common: &Common) -> Result<Run> {
    Run::new(command, args, &common.out, common.seed)
}

pub fn load_dataset(run: &mut Run, arg: &DatasetArg) -> Result<NormDataset> {
    load_dataset_path(run, &arg.dataset, arg.format.as_deref())
}

pub fn load_dataset_path(run: &mut Run, path: &Path, format: Option<&str>) -> Result<NormDataset> {
    let format = match format {
        Some(f) => NormsFormat::from_str(f)?,
        None => NormsFormat::from_path(path)
            .ok_or_else(|| anyhow!("cannot guess the format of {}; pass --format", path.display()))?,
    };
    let ds = parse_norms(run.input(path)?, format)?;
    let violations = validate_dataset(&ds);
    if !violations.is_empty() {
        let lines: Vec<String> = violations.iter().map(|v| format!("  {v}")).collect();
        bail!("{} is not a valid dataset:\n{}", path.display(), lines.join("\n"));
    }
    Ok(ds)
}

/// Model id of a ranking file: its name without `.ranking.jsonl` (or `.jsonl`).
pub fn ranking_id(path: &Path) -> String {
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    for suffix in [".ranking.jsonl", ".jsonl"] {
        if let Some(stem) = name.strip_suffix(suffix) {
            return stem.to_string();
        }
    }
    name
}

pub fn load_ranking(run: &mut Run, path: &Path) -> Result<Ranking> {
    let file = std::fs::File::open(run.input(path)?).with_context(|| format!("opening {}", path.display()))?;
    Ranking::read_jsonl(&ranking_id(path), BufReader::new(file)).with_context(|| format!("in {}", path.display()))
}

pub fn load_rankings(run: &mut Run, paths: &[std::path::PathBuf]) -> Result<BTreeMap<String, Ranking>> {
    let mut out = BTreeMap::new();
    for p in paths {
        let r = load_ranking(run, p)?;
        let id = r.model_id().to_string();
        ensure!(
            out.insert(id.clone(), r).is_none(),
            "two rankings share the model id '{id}'"
        );
    }
    Ok(out)
}

pub fn parse_list<T: FromStr>(text: &str, what: &str) -> Result<Vec<T>> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<T>()
                .map_err(|_| anyhow!("invalid {what} '{}'", s.trim()))
        })
        .collect()
}

/// The K list: explicit (ascending, at least 1) or the default for the
/// dataset, with defaults above the smallest full pool dropped.
pub fn resolve_ks<'a>(
    explicit: Option<&str>,
    dataset: &NormDataset,
    rankings: impl IntoIterator<Item = &'a Ranking>,
) -> Result<Vec<usize>> {
    if let Some(text) = explicit {
        let ks: Vec<usize> = parse_list(text, "K")?;
        ensure!(!ks.is_empty() && ks[0] >= 1, "K values must be at least 1");
        ensure!(
            ks.windows(2).all(|w| w[0] < w[1]),
            "K values must be strictly ascending"
        );
        return Ok(ks);
    }
    let single = dataset.gold.values().all(|g| g.len() == 1);
    let defaults: Vec<usize> = if single { vec![1, 2, 3] } else { vec![1, 5, 10] };
    let pool = rankings
        .into_iter()
        .filter(|r| !r.is_partial())
        .map(|r| r.pool().len())
        .min();
    let ks: Vec<usize> = match pool {
        Some(n) => {
            let (keep, drop): (Vec<usize>, Vec<usize>) = defaults.into_iter().partition(|&k| k <= n);
            if !drop.is_empty() {
                log::warn!("dropping default K {drop:?}: the candidate pool has only {n} properties");
            }
            keep
        }
        None => defaults,
    };
    ensure!(!ks.is_empty(), "no usable K value");
    Ok(ks)
}

/// Concreteness source selected on the command line.
pub enum Source {
    Gold {
        table: ConcretenessTable,
        fallback: Fallback,
        embeds: Option<EmbeddingTable>,
    },
    Predicted {
        predictor: ConcretenessPredictor,
        embeds: EmbeddingTable,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fallback {
    Lcs,
    Embed,
    None,
}

impl FromStr for Fallback {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lcs" => Ok(Fallback::Lcs),
            "embed" => Ok(Fallback::Embed),
            "none" => Ok(Fallback::None),
            other => bail!("unknown fallback '{other}' (expected lcs, embed or none)"),
        }
    }
}

impl ConcretenessSource for Source {
    fn concreteness(&self, word: &str) -> normfuse::Result<Concreteness> {
        match self {
            Source::Gold {
                table,
                fallback,
                embeds,
            } => {
                let policy = match fallback {
                    Fallback::Lcs => FallbackPolicy::LongestMatch,
                    Fallback::None => FallbackPolicy::None,
                    Fallback::Embed => {
                        FallbackPolicy::EmbeddingCosine(embeds.as_ref().expect("checked when the source was built"))
                    }
                };
                lookup(word, table, policy)
            }
            Source::Predicted { predictor, embeds } => PredictedConcreteness { predictor, embeds }.concreteness(word),
        }
    }
}

pub fn load_source(run: &mut Run, args: &SourceArgs) -> Result<Option<Source>> {
    let Some(spec) = args.concreteness.as_deref() else {
        return Ok(None);
    };
    let fallback: Fallback = args.fallback.parse()?;
    let embeds = match &args.embeddings {
        Some(p) => Some(load_embeddings(run.input(p)?)?),
        None => None,
    };
    let source = if let Some(path) = spec.strip_prefix("gold:") {
        ensure!(
            fallback != Fallback::Embed || embeds.is_some(),
            "--fallback embed needs --embeddings"
        );
        Source::Gold {
            table: load_concreteness(run.input(Path::new(path))?)?,
            fallback,
            embeds,
        }
    } else if let Some(path) = spec.strip_prefix("pred:") {
        let predictor = ConcretenessPredictor::load(run.input(Path::new(path))?)?;
        let embeds = embeds.ok_or_else(|| anyhow!("a predicted concreteness source needs --embeddings"))?;
        Source::Predicted { predictor, embeds }
    } else {
        bail!("--concreteness must be gold:<ratings> or pred:<predictor>, got '{spec}'");
    };
    Ok(Some(source))
}

pub fn require_source(run: &mut Run, args: &SourceArgs) -> Result<Source> {
    load_source(run, args)?
        .ok_or_else(|| anyhow!("this command needs --concreteness gold:<ratings> or pred:<predictor>"))
}

fn write_matrix(run: &mut Run, name: &str, matrix: &ScoreMatrix) -> Result<()> {
    run.write_str(&format!("{name}.csv"), &matrix.to_csv_string()?)?;
    run.write_str(&format!("{name}.meta.json"), &report::to_json(matrix.meta())?)
}

// ---- commands ----

#[derive(Serialize)]
struct IngestStats {
    dataset: normfuse::datamodel::DatasetStats,
    #[serde(skip_serializing_if = "Option::is_none")]
    dev: Option<normfuse::datamodel::DatasetStats>,
    #[serde(skip_serializing_if = "Option::is_none")]
    test: Option<normfuse::datamodel::DatasetStats>,
}

pub fn ingest(a: IngestArgs, args: Vec<String>) -> Result<()> {
    let mut run = new_run("ingest", args, &a.common)?;
    let ds = load_dataset(&mut run, &a.data)?;
    let stats = dataset_stats(&ds)?;
    println!("{}: {stats}", ds.name);
    run.write_str(
        &format!("{}.jsonl", ds.name),
        &format_norms(&ds, NormsFormat::RecordsJsonl)?,
    )?;

    let mut out = IngestStats {
        dataset: stats,
        dev: None,
        test: None,
    };
    if let Some(n) = a.split_dev {
        let mut exclude = BTreeSet::new();
        for p in &a.exclude {
            let other = load_dataset_path(&mut run, p, None)?;
            exclude.extend(other.noun_ids());
        }
        let seed = run.seed("split");
        let (dev, test) = normfuse::ingest::split_dev(&ds, n, &exclude, seed)?;
        run.write_str(
            &format!("{}.jsonl", dev.name),
            &format_norms(&dev, NormsFormat::RecordsJsonl)?,
        )?;
        run.write_str(
            &format!("{}.jsonl", test.name),
            &format_norms(&test, NormsFormat::RecordsJsonl)?,
        )?;
        out.dev = Some(dataset_stats(&dev)?);
        out.test = Some(dataset_stats(&test)?);
    } else if !a.exclude.is_empty() {
        bail!("--exclude only applies together with --split-dev");
    }
    run.write_str("stats.json", &report::to_json(&out)?)?;
    run.finish()
}

pub fn aggregate(a: AggregateArgs, args: Vec<String>) -> Result<()> {
    let mut run = new_run("aggregate", args, &a.common)?;
    let ds = load_dataset(&mut run, &a.data)?;
    let records = load_records(run.input(&a.records)?)?;
    let spec = AggregationSpec {
        missing_policy: match a.missing.as_str() {
            "error" => MissingPolicy::Error,
            "fill" => MissingPolicy::FillNegInfRankLast,
            other => bail!("unknown missing policy '{other}' (expected error or fill)"),
        },
        image_budget: a.images,
        ..AggregationSpec::default()
    };

    let (mut lm, mut texts, mut images, mut generated) = (Vec::new(), Vec::new(), Vec::new(), 0usize);
    for r in records {
        match r {
            Record::Lm(r) => lm.push(r),
            Record::Embedding(e) if e.kind == EmbedKind::TextPrompt => texts.push(e),
            Record::Embedding(e) => images.push(e),
            Record::Generated(_) => generated += 1,
        }
    }
    ensure!(
        generated == 0,
        "generated records are already rankings; use `normfuse rank --records`"
    );
    ensure!(
        lm.is_empty() || (texts.is_empty() && images.is_empty()),
        "record file mixes lm and embedding records"
    );

    let matrix = if !lm.is_empty() {
        if let Some(m) = &a.model {
            lm.retain(|r| r.model_id == *m);
            ensure!(!lm.is_empty(), "no records for model '{m}'");
        }
        let models: BTreeSet<&str> = lm.iter().map(|r| r.model_id.as_str()).collect();
        ensure!(
            models.len() == 1,
            "records hold several models {models:?}; select one with --model"
        );
        aggregate_lm(&lm, &ds, &spec)?
    } else {
        ensure!(!texts.is_empty(), "no records to aggregate");
        clip_scores(a.model.as_deref().unwrap_or("clip"), &texts, &images, &ds, &spec)?
    };
    let name = matrix.model_id().to_string();
    write_matrix(&mut run, &name, &matrix)?;
    run.finish()
}

pub fn rank(a: RankArgs, args: Vec<String>) -> Result<()> {
    let mut run = new_run("rank", args, &a.common)?;
    let ranking = if let Some(path) = &a.matrix {
        let name = path.to_string_lossy();
        let stem = name.strip_suffix(".csv").unwrap_or(&name);
        let meta_path = std::path::PathBuf::from(format!("{stem}.meta.json"));
        let meta_text = std::fs::read_to_string(run.input(&meta_path)?)?;
        let meta: MatrixMeta =
            serde_json::from_str(&meta_text).with_context(|| format!("parsing {}", meta_path.display()))?;
        let text = std::fs::read_to_string(run.input(path)?)?;
        fusion::rank(&ScoreMatrix::read_csv(&text, meta).with_context(|| format!("in {}", path.display()))?)
    } else {
        let path = a.records.as_ref().expect("clap requires --matrix or --records");
        let mut lists: BTreeMap<String, Vec<String>> = BTreeMap::new();
        let mut models = BTreeSet::new();
        for r in load_records(run.input(path)?)? {
            let Record::Generated(g) = r else {
                bail!("{} holds non-generated records; aggregate them first", path.display());
            };
            models.insert(g.model_id.clone());
            let mut order: Vec<String> = Vec::new();
            for p in g.properties.iter().map(|p| normalize_id(p)) {
                if !order.contains(&p) {
                    order.push(p);
                }
            }
            ensure!(
                lists.insert(normalize_id(&g.noun_id), order).is_none(),
                "duplicate noun '{}'",
                g.noun_id
            );
        }
        ensure!(
            models.len() == 1,
            "expected one model in {}, found {models:?}",
            path.display()
        );
        Ranking::partial(models.first().expect("one model"), lists)?
    };
    run.write_str(
        &format!("{}.ranking.jsonl", ranking.model_id()),
        &ranking.to_jsonl_string()?,
    )?;
    run.finish()
}

pub fn fuse(a: FuseArgs, args: Vec<String>) -> Result<()> {
    let mut run = new_run("fuse", args, &a.common)?;
    let text = load_ranking(&mut run, &a.text)?;
    let vision = load_ranking(&mut run, &a.vision)?;
    let source = load_source(&mut run, &a.source)?;
    let strategy = match a.strategy.as_str() {
        "cem" => FusionStrategy::Cem(
            source
                .as_ref()
                .ok_or_else(|| anyhow!("the cem strategy needs --concreteness"))?,
        ),
        "average" => FusionStrategy::Average,
        "max" => FusionStrategy::Max,
        "min" => FusionStrategy::Min,
        "random" => FusionStrategy::Random(run.seed("fusion_random")),
        s => {
            if let Some(w) = s.strip_prefix("fixed:") {
                FusionStrategy::fixed(w.parse().map_err(|_| anyhow!("invalid weight '{w}'"))?)?
            } else if let Some(seed) = s.strip_prefix("random:") {
                let seed: u64 = seed.parse().map_err(|_| anyhow!("invalid seed '{seed}'"))?;
                run.note_seed("fusion_random", seed);
                FusionStrategy::Random(seed)
            } else {
                bail!("unknown strategy '{s}' (expected cem, fixed:<w>, random[:<seed>], average, max or min)");
            }
        }
    };
    let fused = fusion::fuse(&text, &vision, &strategy)?;
    run.write_str(&format!("{}.ranking.jsonl", a.name), &fused.to_jsonl_string()?)?;
    run.finish()
}

pub fn eval(a: EvalArgs, args: Vec<String>) -> Result<()> {
    let mut run = new_run("eval", args, &a.common)?;
    let ds = load_dataset(&mut run, &a.data)?;
    let rankings = load_rankings(&mut run, &a.ranking)?;
    let ks = resolve_ks(a.k.as_deref(), &ds, rankings.values())?;
    let reports: Vec<MetricReport> = rankings
        .values()
        .map(|r| evaluate(r, &ds.gold, &ks).with_context(|| format!("evaluating '{}'", r.model_id())))
        .collect::<Result<_>>()?;
    let table = report::text_table(&reports);
    print!("{table}");
    run.write_str("metrics.csv", &report::metrics_csv_string(&reports)?)?;
    run.write_str("metrics.json", &report::to_json(&reports)?)?;
    run.write_str("metrics.txt", &table)?;
    run.finish()
}

#[derive(Serialize)]
struct HoldoutReport {
    words: usize,
    skipped: Vec<String>,
    spearman: Option<f64>,
}

pub fn concreteness(c: ConcretenessCommand, args: Vec<String>) -> Result<()> {
    match c {
        ConcretenessCommand::Train(a) => {
            let mut run = new_run("concreteness-train", args, &a.common)?;
            let ratings = load_concreteness(run.input(&a.ratings)?)?;
            let embeds = load_embeddings(run.input(&a.embeddings)?)?;
            let holdout: BTreeSet<String> = match &a.holdout {
                Some(p) => read_words(&mut run, p)?.into_iter().collect(),
                None => BTreeSet::new(),
            };
            let predictor = train_predictor(&ratings, &embeds, &holdout, a.lambda)?;
            run.write_str("predictor.json", &predictor.to_json()?)?;

            if a.holdout.is_some() {
                let (mut pred, mut gold, mut rows, mut skipped) = (Vec::new(), Vec::new(), String::new(), Vec::new());
                rows.push_str("word\tgold\tpredicted\n");
                for w in &holdout {
                    match (ratings.score(w), predictor.predict(&embeds, w)) {
                        (Some(g), Ok(p)) => {
                            rows.push_str(&format!("{w}\t{g}\t{p}\n"));
                            gold.push(g);
                            pred.push(p);
                        }
                        _ => skipped.push(w.clone()),
                    }
                }
                if !skipped.is_empty() {
                    log::warn!("{} held-out words lack a rating or an embedding", skipped.len());
                }
                let rho = if pred.len() >= 2 {
                    spearman(&pred, &gold).ok()
                } else {
                    None
                };
                if let Some(r) = rho {
                    println!("held-out spearman: {r:.4} over {} words", pred.len());
                }
                run.write_str("holdout.tsv", &rows)?;
                run.write_str(
                    "holdout.json",
                    &report::to_json(&HoldoutReport {
                        words: pred.len(),
                        skipped,
                        spearman: rho,
                    })?,
                )?;
            }
            run.finish()
        }
        ConcretenessCommand::Predict(a) => {
            let mut run = new_run("concreteness-predict", args, &a.common)?;
            let predictor = ConcretenessPredictor::load(run.input(&a.predictor)?)?;
            let embeds = load_embeddings(run.input(&a.embeddings)?)?;
            let words = match (&a.words, &a.dataset) {
                (Some(p), _) => read_words(&mut run, p)?,
                (None, Some(p)) => load_dataset_path(&mut run, p, a.format.as_deref())?.property_ids(),
                (None, None) => unreachable!("clap requires --words or --dataset"),
            };
            let mut out = String::from("word\tconcreteness\n");
            for w in &words {
                match predictor.predict(&embeds, w) {
                    Ok(s) => out.push_str(&format!("{w}\t{s}\n")),
                    Err(e) => {
                        log::warn!("{w}: {e}");
                        out.push_str(&format!("{w}\tNA\n"));
                    }
                }
            }
            run.write_str("predictions.tsv", &out)?;
            run.finish()
        }
        ConcretenessCommand::Lookup(a) => {
            let mut run = new_run("concreteness-lookup", args, &a.common)?;
            let ds = load_dataset(&mut run, &a.data)?;
            let source = require_source(&mut run, &a.source)?;
            let mut out = String::from("property\tconcreteness\tprovenance\tmatched\n");
            for p in ds.property_ids() {
                match source.concreteness(&p) {
                    Ok(c) => out.push_str(&format!("{p}\t{}\t{}\t{}\n", c.score, c.provenance, c.matched)),
                    Err(e) => {
                        log::warn!("{p}: {e}");
                        out.push_str(&format!("{p}\tNA\tNA\tNA\n"));
                    }
                }
            }
            run.write_str("concreteness.tsv", &out)?;
            run.finish()
        }
    }
}

fn read_words(run: &mut Run, path: &Path) -> Result<Vec<String>> {
    let text = std::fs::read_to_string(run.input(path)?)?;
    Ok(text
        .lines()
        .map(normalize_id)
        .filter(|w| !w.is_empty() && !w.starts_with('#'))
        .collect())
}

pub fn baseline(b: BaselineCommand, args: Vec<String>) -> Result<()> {
    let (mut run, matrix) = match b {
        BaselineCommand::Random(a) => {
            let mut run = new_run("baseline-random", args, &a.common)?;
            let ds = load_dataset(&mut run, &a.data)?;
            let seed = run.seed("baseline_random");
            (run, scoring::baseline_random(&ds, seed)?)
        }
        BaselineCommand::Embedding(a) => {
            let mut run = new_run("baseline-embedding", args, &a.common)?;
            let ds = load_dataset(&mut run, &a.data)?;
            let embeds = load_embeddings(run.input(&a.embeddings)?)?;
            (run, scoring::baseline_embedding(&ds, &embeds)?)
        }
        BaselineCommand::Ngram(a) => {
            let mut run = new_run("baseline-ngram", args, &a.common)?;
            let ds = load_dataset(&mut run, &a.data)?;
            let ngrams = load_ngrams(run.input(&a.ngrams)?)?;
            (run, scoring::baseline_ngram(&ds, &ngrams)?)
        }
    };
    let name = matrix.model_id().to_string();
    write_matrix(&mut run, &name, &matrix)?;
    run.finish()
}

pub fn sweep(a: SweepArgs, args: Vec<String>) -> Result<()> {
    let mut run = new_run("sweep", args, &a.common)?;
    let ds = load_dataset(&mut run, &a.data)?;
    let text = load_ranking(&mut run, &a.text)?;
    let vision = load_ranking(&mut run, &a.vision)?;
    let ks = resolve_ks(a.k.as_deref(), &ds, [&text, &vision])?;
    let weights = match &a.weights {
        Some(w) => parse_list::<f64>(w, "weight")?,
        None => default_sweep_weights(),
    };
    let points = fusion::sweep(&text, &vision, &weights, &ds.gold, &ks)?;

    let mut csv = String::from("weight,metric,value\n");
    for p in &points {
        for (metric, value) in report::metric_rows(&p.report) {
            let v = value.map_or_else(|| "NA".to_string(), |v| v.to_string());
            csv.push_str(&format!("{},{metric},{v}\n", p.weight));
        }
    }
    let series: Vec<Series> = ks
        .iter()
        .map(|k| Series {
            name: format!("A@{k}"),
            points: points.iter().map(|p| (p.weight, p.report.accuracy[k])).collect(),
        })
        .collect();
    let title = format!("fixed-weight fusion of {} and {}", text.model_id(), vision.model_id());
    run.write_str("sweep.json", &report::to_json(&points)?)?;
    run.write_str("sweep.csv", &csv)?;
    run.write_str(
        "sweep.svg",
        &line_chart(&title, "vision weight", "accuracy (%)", &series),
    )?;
    run.finish()
}
