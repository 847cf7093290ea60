//! Rank-size (Zipf) plot data with model predictions.

use crate::ingest::Dataset;
use citysize::DistributionSpec;
use std::fmt::Write as _;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlotRow {
    pub rank: usize,
    pub log_rank: f64,
    pub log_size: f64,
    pub log_predicted: f64,
}

/// Row `i` pairs the `i`-th largest size with the model quantile at `1 - (i - 0.5)/n`.
pub fn rank_size_plot_data(dataset: &Dataset, spec: &DistributionSpec) -> Vec<PlotRow> {
    let mut sizes = dataset.sizes.clone();
    sizes.sort_by(|a, b| b.total_cmp(a));
    let n = sizes.len() as f64;
    sizes
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let rank = i + 1;
            let q = 1.0 - (rank as f64 - 0.5) / n;
            PlotRow { rank, log_rank: (rank as f64).ln(), log_size: x.ln(), log_predicted: spec.quantile_log(q) }
        })
        .collect()
}

/// Tab-separated with a header line.
pub fn to_tsv(rows: &[PlotRow]) -> String {
    let mut out = String::from("rank\tlog_rank\tlog_size\tlog_predicted\n");
    for r in rows {
        let _ = writeln!(out, "{}\t{}\t{}\t{}", r.rank, r.log_rank, r.log_size, r.log_predicted);
    }
    out
}
