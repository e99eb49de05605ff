use std::collections::BTreeMap;

use anyhow::{anyhow, ensure, Result};
use normfuse::datamodel::Ranking;
use normfuse::evaluation::{
    band_experiment, bin_by_concreteness, duplicate_topk, multipiece_eval, piece_counts_from_records,
    prediction_frequency, rank_improvement, subset_eval, Band, RiEntry,
};
use normfuse::ingest::{load_ngrams, load_pairs, load_records, Record};
use normfuse::plot::{bar_chart, grouped_bar_chart};
use normfuse::report;

use crate::commands::{load_dataset, load_ranking, load_rankings, new_run, require_source, resolve_ks};
use crate::run::Run;
use crate::AnalyzeCommand;

pub fn analyze(c: AnalyzeCommand, args: Vec<String>) -> Result<()> {
    match c {
        AnalyzeCommand::Ri(a) => {
            let mut run = new_run("analyze-ri", args, &a.common)?;
            let ds = load_dataset(&mut run, &a.data)?;
            let entries = ri_entries(&mut run, &ds, &a.fused, &a.base)?;
            let mut csv = String::from("noun,property,base_rank,fused_rank,ri\n");
            for e in &entries {
                csv.push_str(&format!(
                    "{},{},{},{},{}\n",
                    e.noun, e.property, e.base_rank, e.fused_rank, e.ri
                ));
            }
            run.write_str("ri.json", &report::to_json(&entries)?)?;
            run.write_str("ri.csv", &csv)?;
            run.finish()
        }
        AnalyzeCommand::Bins(a) => {
            let mut run = new_run("analyze-bins", args, &a.common)?;
            let ds = load_dataset(&mut run, &a.data)?;
            let source = require_source(&mut run, &a.source)?;
            let entries = ri_entries(&mut run, &ds, &a.fused, &a.base)?;
            let bins = bin_by_concreteness(&entries, &source, a.nbins)?;
            let bars: Vec<(String, f64)> = bins
                .bins
                .iter()
                .enumerate()
                .map(|(i, b)| (format!("{}", i + 1), b.mean_ri))
                .collect();
            run.write_str("bins.json", &report::to_json(&bins)?)?;
            run.write_str(
                "bins.svg",
                &bar_chart(
                    "rank improvement by concreteness",
                    "concreteness bin (low to high)",
                    "mean RI",
                    &bars,
                ),
            )?;
            run.finish()
        }
        AnalyzeCommand::Bands(a) => {
            let mut run = new_run("analyze-bands", args, &a.common)?;
            let ds = load_dataset(&mut run, &a.data)?;
            let rankings = load_rankings(&mut run, &a.ranking)?;
            let source = require_source(&mut run, &a.source)?;
            let bands = match a.band.as_str() {
                "all" => vec![Band::Most, Band::Least, Band::Random],
                b => vec![b.parse()?],
            };
            let seed = run.seed("bands");
            let reports = bands
                .iter()
                .map(|&b| band_experiment(&ds.gold, &rankings, &source, b, a.trials, seed))
                .collect::<normfuse::Result<Vec<_>>>()?;

            let groups: Vec<String> = reports.iter().map(|r| r.band.to_string()).collect();
            let series: Vec<(String, Vec<f64>)> = rankings
                .keys()
                .map(|m| (m.clone(), reports.iter().map(|r| r.models[m].mean).collect()))
                .collect();
            let errors: Vec<Vec<f64>> = rankings
                .keys()
                .map(|m| reports.iter().map(|r| r.models[m].sd).collect())
                .collect();
            run.write_str("bands.json", &report::to_json(&reports)?)?;
            run.write_str(
                "bands.svg",
                &grouped_bar_chart(
                    "A@1 by gold concreteness band",
                    "band",
                    "A@1 (%)",
                    &groups,
                    &series,
                    Some(&errors),
                ),
            )?;
            run.finish()
        }
        AnalyzeCommand::Duplicates(a) => {
            let mut run = new_run("analyze-duplicates", args, &a.common)?;
            let rankings = load_rankings(&mut run, &a.ranking)?;
            let reports = rankings
                .iter()
                .map(|(m, r)| Ok((m.clone(), duplicate_topk(r, a.top)?)))
                .collect::<Result<BTreeMap<_, _>>>()?;
            let bars: Vec<(String, f64)> = reports.iter().map(|(m, r)| (m.clone(), r.count as f64)).collect();
            run.write_str("duplicates.json", &report::to_json(&reports)?)?;
            run.write_str(
                "duplicates.svg",
                &bar_chart(&format!("nouns sharing a top-{} list", a.top), "model", "nouns", &bars),
            )?;
            run.finish()
        }
        AnalyzeCommand::Multipiece(a) => {
            let mut run = new_run("analyze-multipiece", args, &a.common)?;
            let ds = load_dataset(&mut run, &a.data)?;
            let rankings = load_rankings(&mut run, &a.ranking)?;
            let lm: Vec<_> = load_records(run.input(&a.records)?)?
                .into_iter()
                .filter_map(|r| match r {
                    Record::Lm(r) => Some(r),
                    _ => None,
                })
                .collect();
            let mut counts = piece_counts_from_records(&lm)?;
            let counts = match &a.model {
                Some(m) => counts
                    .remove(m)
                    .ok_or_else(|| anyhow!("no lm records for model '{m}'"))?,
                None => {
                    ensure!(
                        counts.len() == 1,
                        "records hold {} models; select one with --model",
                        counts.len()
                    );
                    counts.into_values().next().expect("one model")
                }
            };
            let ks = resolve_ks(a.k.as_deref(), &ds, rankings.values())?;
            let reports = each(&rankings, |r| Ok(multipiece_eval(r, &ds.gold, &counts, &ks)?))?;
            run.write_str("multipiece.json", &report::to_json(&reports)?)?;
            run.finish()
        }
        AnalyzeCommand::Predfreq(a) => {
            let mut run = new_run("analyze-predfreq", args, &a.common)?;
            let ds = load_dataset(&mut run, &a.data)?;
            let rankings = load_rankings(&mut run, &a.ranking)?;
            let ngrams = load_ngrams(run.input(&a.ngrams)?)?;
            let reports = each(&rankings, |r| Ok(prediction_frequency(r, a.top, &ngrams, &ds)?))?;
            run.write_str("predfreq.json", &report::to_json(&reports)?)?;
            run.finish()
        }
        AnalyzeCommand::Subset(a) => {
            let mut run = new_run("analyze-subset", args, &a.common)?;
            let ds = load_dataset(&mut run, &a.data)?;
            let rankings = load_rankings(&mut run, &a.ranking)?;
            let pairs = load_pairs(run.input(&a.subset)?)?;
            let ks = resolve_ks(a.k.as_deref(), &ds, rankings.values())?;
            let reports = each(&rankings, |r| Ok(subset_eval(r, &ds.gold, &pairs, &ks)?))?;
            run.write_str("subset.json", &report::to_json(&reports)?)?;
            run.finish()
        }
    }
}

fn ri_entries(
    run: &mut Run,
    ds: &normfuse::datamodel::NormDataset,
    fused: &std::path::Path,
    base: &std::path::Path,
) -> Result<Vec<RiEntry>> {
    let fused = load_ranking(run, fused)?;
    let base = load_ranking(run, base)?;
    Ok(rank_improvement(&fused, &base, &ds.gold_pairs())?)
}

fn each<T>(rankings: &BTreeMap<String, Ranking>, f: impl Fn(&Ranking) -> Result<T>) -> Result<BTreeMap<String, T>> {
    rankings.iter().map(|(m, r)| Ok((m.clone(), f(r)?))).collect()
}
