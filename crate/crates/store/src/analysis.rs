//! From stored events to indicator values, correlations and predictions.

use std::collections::{BTreeMap, BTreeSet};

use interest_core::indicators::{derive_indicators, FragmentForest, IndicatorConfig, IndicatorError, IndicatorValue};
use interest_core::model::{ContentId, UserId};
use interest_core::stats::{
    aggregate_table, build_user_model, predict_interest, user_correlations, AggregateRow, ContentObservations,
    CorrelationRecord, Prediction, StatsError, UserModel,
};
use interest_core::timeline::build_timeline;
use thiserror::Error;

use crate::db::{Dataset, StoreError};

/// Significance level for model terms and the aggregate table.
pub const ALPHA: f64 = 0.05;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Indicators(#[from] IndicatorError),
    #[error("fragment layout: {0}")]
    Forest(String),
    #[error("timeline of session {session}, page {page}: {message}")]
    Timeline {
        session: String,
        page: String,
        message: String,
    },
    #[error("page {0} has events but no page record")]
    UnknownPage(String),
    #[error(transparent)]
    Stats(#[from] StatsError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PredictionRow {
    pub user_id: UserId,
    pub content_id: ContentId,
    pub prediction: Prediction,
    /// The user's rating mapped onto [0, 1], if they gave one.
    pub explicit: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Analysis {
    pub values: Vec<IndicatorValue>,
    pub correlations: Vec<CorrelationRecord>,
    pub aggregate: Vec<AggregateRow>,
    pub models: Vec<UserModel>,
    pub predictions: Vec<PredictionRow>,
    pub observations: BTreeMap<UserId, ContentObservations>,
}

pub fn analyze(dataset: &Dataset, config: &IndicatorConfig) -> Result<Analysis, AnalysisError> {
    config.validate().map_err(IndicatorError::from)?;
    let forest =
        FragmentForest::new(dataset.fragments.iter().cloned()).map_err(|e| AnalysisError::Forest(e.to_string()))?;

    let mut values = Vec::new();
    let mut observations: BTreeMap<UserId, ContentObservations> = BTreeMap::new();
    for ((session_id, page_id), events) in &dataset.timelines {
        let Some(session) = dataset.sessions.get(session_id) else {
            continue;
        };
        let page = dataset
            .pages
            .get(page_id)
            .ok_or_else(|| AnalysisError::UnknownPage(page_id.to_string()))?;
        let timeline = build_timeline(events.iter().cloned()).map_err(|e| AnalysisError::Timeline {
            session: session_id.to_string(),
            page: page_id.to_string(),
            message: e.to_string(),
        })?;
        let derivation = derive_indicators(&timeline, &session.user_id, session.device_class, &forest, config)?;
        observations
            .entry(session.user_id.clone())
            .or_default()
            .observe(&derivation.tally, &forest, page.page_class);
        values.extend(derivation.values);
    }
    values.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));

    let mut users: BTreeSet<UserId> = dataset.sessions.values().map(|s| s.user_id.clone()).collect();
    users.extend(dataset.ratings.iter().map(|r| r.user_id.clone()));

    let mut correlations = Vec::new();
    let mut models = Vec::new();
    let mut predictions = Vec::new();
    let empty = ContentObservations::default();
    for user in &users {
        let observed = observations.get(user).unwrap_or(&empty);
        let ratings: Vec<_> = dataset.ratings.iter().filter(|r| &r.user_id == user).cloned().collect();
        let records = user_correlations(user, observed, &ratings);
        let mut universe = observed.contents();
        universe.extend(ratings.iter().map(|r| r.content_id.clone()));
        let model = build_user_model(user, &records, observed, &universe, ALPHA);
        if !model.terms.is_empty() {
            for content in &universe {
                let explicit = ratings
                    .iter()
                    .find(|r| &r.content_id == content && r.noticed)
                    .and_then(|r| r.likert)
                    .map(|l| l.to_unit());
                predictions.push(PredictionRow {
                    user_id: user.clone(),
                    content_id: content.clone(),
                    prediction: predict_interest(&model, observed, content)?,
                    explicit,
                });
            }
        }
        correlations.extend(records);
        models.push(model);
    }
    let aggregate = aggregate_table(&correlations, ALPHA);
    Ok(Analysis {
        values,
        correlations,
        aggregate,
        models,
        predictions,
        observations,
    })
}
