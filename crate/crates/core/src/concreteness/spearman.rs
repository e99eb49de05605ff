use crate::error::{Error, Result};

/// 1-based ranks with ties sharing their average rank.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < idx.len() {
        let mut end = start + 1;
        while end < idx.len() && values[idx[end]] == values[idx[start]] {
            end += 1;
        }
        // positions start..end hold ranks start+1..=end
        let avg = (start + 1 + end) as f64 / 2.0;
        for &k in &idx[start..end] {
            ranks[k] = avg;
        }
        start = end;
    }
    ranks
}

/// Spearman rank correlation: Pearson correlation of average ranks.
pub fn spearman(pred: &[f64], gold: &[f64]) -> Result<f64> {
    if pred.len() != gold.len() {
        return Err(Error::Mismatch(format!(
            "{} predictions for {} gold values",
            pred.len(),
            gold.len()
        )));
    }
    if pred.len() < 2 {
        return Err(Error::InvalidArgument("spearman needs at least two values".into()));
    }
    let rp = average_ranks(pred);
    let rg = average_ranks(gold);
    let n = rp.len() as f64;
    let mp = rp.iter().sum::<f64>() / n;
    let mg = rg.iter().sum::<f64>() / n;
    let (mut cov, mut vp, mut vg) = (0.0, 0.0, 0.0);
    for (a, b) in rp.iter().zip(&rg) {
        cov += (a - mp) * (b - mg);
        vp += (a - mp) * (a - mp);
        vg += (b - mg) * (b - mg);
    }
    if vp == 0.0 || vg == 0.0 {
        return Err(Error::InvalidArgument(
            "spearman is undefined for constant input".into(),
        ));
    }
    Ok((cov / (vp * vg).sqrt()).clamp(-1.0, 1.0))
}
