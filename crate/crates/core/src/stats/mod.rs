//! Correlating indicators with explicit ratings, aggregating the results and
//! predicting interest from the per-user model.

mod aggregate;
mod correlation;
mod model;

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

pub use aggregate::{aggregate_table, correlation_bucket, AggregateRow, BUCKET_LABELS};
pub use correlation::{p_two_tailed, pearson_r, user_correlations, CorrelationRecord};
pub use model::{
    build_user_model, normalize_value, predict_interest, weighted_interest, ModelTerm, Prediction, UserModel,
};

use crate::indicators::{amount_to_value, FragmentForest, IndicatorKind, Tally};
use crate::model::{ContentId, PageClass};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StatsError {
    #[error("series lengths differ: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("a series is constant")]
    ConstantSeries,
    #[error("invalid correlation {0}")]
    InvalidCorrelation(f64),
    #[error("degenerate range [{min}, {max}]")]
    DegenerateRange { min: f64, max: f64 },
    #[error("value {value} outside [{min}, {max}]")]
    OutOfRange { value: f64, min: f64, max: f64 },
    #[error("no terms to combine")]
    EmptyModel,
    #[error("weights must be finite and sum to a positive amount")]
    BadWeights,
    #[error("non-finite value {0}")]
    NonFinite(f64),
}

/// Indicator values per content item and page class, summed over sessions.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ContentObservations {
    values: BTreeMap<(ContentId, PageClass, IndicatorKind), f64>,
}

impl ContentObservations {
    pub fn add(&mut self, content: &ContentId, page_class: PageClass, kind: IndicatorKind, value: f64) {
        *self.values.entry((content.clone(), page_class, kind)).or_insert(0.0) += value;
    }

    /// Missing observations read as 0.
    pub fn value(&self, content: &ContentId, page_class: PageClass, kind: IndicatorKind) -> f64 {
        self.values
            .get(&(content.clone(), page_class, kind))
            .copied()
            .unwrap_or(0.0)
    }

    pub fn contents(&self) -> BTreeSet<ContentId> {
        self.values.keys().map(|(c, _, _)| c.clone()).collect()
    }

    /// Every (page class, kind) with at least one observation.
    pub fn series(&self) -> impl Iterator<Item = (PageClass, IndicatorKind)> + '_ {
        self.values.keys().map(|(_, pc, k)| (*pc, *k))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&ContentId, PageClass, IndicatorKind, f64)> {
        self.values.iter().map(|((c, pc, k), v)| (c, *pc, *k, *v))
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Adds a page's tally. A fragment speaks for its content item when it is
    /// tagged and no ancestor carries the same tag.
    pub fn observe(&mut self, tally: &Tally, forest: &FragmentForest, page_class: PageClass) {
        for (fragment_id, kind, amount) in tally.iter() {
            let Some(content) = forest.get(fragment_id).and_then(|f| f.content_id.as_ref()) else {
                continue;
            };
            let nested = forest
                .ancestors(fragment_id)
                .any(|a| forest.get(a).and_then(|f| f.content_id.as_ref()) == Some(content));
            if !nested {
                self.add(content, page_class, kind, amount_to_value(kind, amount));
            }
        }
    }
}
