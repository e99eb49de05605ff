//! Ranking metrics (top-K accuracy, top-K recall, mean reciprocal rank) and
//! the analyses built on them.

mod analysis;
mod metrics;

pub use analysis::{
    band_experiment, bin_by_concreteness, bin_sizes, duplicate_topk, multipiece_eval, piece_counts_from_records,
    prediction_frequency, rank_improvement, select_band_gold, subset_eval, Band, BandReport, BandStat, Bin, BinReport,
    DuplicateGroup, DuplicateReport, FrequencyReport, RiEntry, SubsetReport,
};
pub use metrics::{accuracy_at_k, evaluate, mrr, recall_at_k, MetricReport, NounDetail};
