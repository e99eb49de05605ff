use std::collections::BTreeSet;

use crate::datamodel::NormDataset;
use crate::error::{Error, Result};
use crate::rng::SplitMix64;

/// Draws `n` development nouns uniformly without replacement from the nouns
/// not in `exclude`; the rest form the test set. Both halves keep the full
/// candidate pool.
///
/// Eligible nouns are sorted by id and shuffled with a partial Fisher-Yates
/// pass driven by [`SplitMix64`], so the result depends only on the noun ids,
/// `n` and `seed`.
pub fn split_dev(
    dataset: &NormDataset,
    n: usize,
    exclude: &BTreeSet<String>,
    seed: u64,
) -> Result<(NormDataset, NormDataset)> {
    let mut eligible: Vec<&String> = dataset
        .nouns
        .iter()
        .map(|noun| &noun.id)
        .filter(|id| !exclude.contains(*id))
        .collect();
    eligible.sort();
    if n > eligible.len() {
        return Err(Error::InvalidArgument(format!(
            "cannot draw {n} dev nouns: only {} eligible",
            eligible.len()
        )));
    }

    let mut rng = SplitMix64::new(seed);
    for i in 0..n {
        let j = i + rng.below((eligible.len() - i) as u64) as usize;
        eligible.swap(i, j);
    }
    let dev: BTreeSet<String> = eligible[..n].iter().map(|s| s.to_string()).collect();
    let test: BTreeSet<String> = dataset
        .nouns
        .iter()
        .map(|noun| noun.id.clone())
        .filter(|id| !dev.contains(id))
        .collect();

    Ok((
        dataset.restrict_nouns(&format!("{}-dev", dataset.name), &dev),
        dataset.restrict_nouns(&format!("{}-test", dataset.name), &test),
    ))
}
