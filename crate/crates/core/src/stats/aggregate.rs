use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::CorrelationRecord;
use crate::indicators::IndicatorKind;
use crate::model::PageClass;

pub const BUCKET_LABELS: [&str; 5] = ["corr_lt_0_2", "corr_lt_0_4", "corr_lt_0_6", "corr_lt_0_8", "corr_ge_0_8"];

/// Bucket of a correlation coefficient. Negative values fall in the first.
pub fn correlation_bucket(r: f64) -> usize {
    if r < 0.2 {
        0
    } else if r < 0.4 {
        1
    } else if r < 0.6 {
        2
    } else if r < 0.8 {
        3
    } else {
        4
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub indicator_kind: IndicatorKind,
    pub page_class: PageClass,
    pub n_significant: usize,
    pub mean_r: f64,
    pub buckets: [usize; 5],
}

/// Summarises per-user correlations significant at `alpha` for each
/// (indicator, page class). Pairs without a significant user are left out.
pub fn aggregate_table(records: &[CorrelationRecord], alpha: f64) -> Vec<AggregateRow> {
    let mut groups: BTreeMap<(IndicatorKind, PageClass), Vec<f64>> = BTreeMap::new();
    for record in records.iter().filter(|r| r.p < alpha) {
        groups
            .entry((record.indicator_kind, record.page_class))
            .or_default()
            .push(record.r);
    }
    groups
        .into_iter()
        .map(|((indicator_kind, page_class), rs)| {
            let mut buckets = [0; 5];
            for r in &rs {
                buckets[correlation_bucket(*r)] += 1;
            }
            AggregateRow {
                indicator_kind,
                page_class,
                n_significant: rs.len(),
                mean_r: rs.iter().sum::<f64>() / rs.len() as f64,
                buckets,
            }
        })
        .collect()
}
