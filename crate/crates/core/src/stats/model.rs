use std::collections::BTreeSet;

use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use super::{ContentObservations, CorrelationRecord, StatsError};
use crate::indicators::IndicatorKind;
use crate::model::{ContentId, PageClass, UserId};

/// Min-max scaling onto [0, 1].
pub fn normalize_value(value: f64, min: f64, max: f64) -> Result<f64, StatsError> {
    for v in [value, min, max] {
        if !v.is_finite() {
            return Err(StatsError::NonFinite(v));
        }
    }
    if max <= min {
        return Err(StatsError::DegenerateRange { min, max });
    }
    if value < min || value > max {
        return Err(StatsError::OutOfRange { value, min, max });
    }
    Ok((value - min) / (max - min))
}

fn rational(v: f64) -> Result<BigRational, StatsError> {
    BigRational::from_float(v).ok_or(StatsError::NonFinite(v))
}

/// Weighted mean of `(value, weight)` pairs, computed exactly and rounded once.
pub fn weighted_interest(terms: &[(f64, f64)]) -> Result<f64, StatsError> {
    if terms.is_empty() {
        return Err(StatsError::EmptyModel);
    }
    let mut numerator = BigRational::zero();
    let mut denominator = BigRational::zero();
    for &(value, weight) in terms {
        let w = rational(weight).map_err(|_| StatsError::BadWeights)?;
        numerator += rational(value)? * &w;
        denominator += w;
    }
    if denominator <= BigRational::zero() {
        return Err(StatsError::BadWeights);
    }
    (numerator / denominator).to_f64().ok_or(StatsError::BadWeights)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelTerm {
    pub indicator_kind: IndicatorKind,
    pub page_class: PageClass,
    pub weight: f64,
    pub min: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserModel {
    pub user_id: UserId,
    pub terms: Vec<ModelTerm>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub value: f64,
    pub terms_used: usize,
}

/// Keeps the user's positive correlations significant at `alpha` as model
/// terms. Value ranges are taken over `universe` per page class with missing
/// values as 0; terms whose range is a single point are dropped.
pub fn build_user_model(
    user_id: &UserId,
    records: &[CorrelationRecord],
    observations: &ContentObservations,
    universe: &BTreeSet<ContentId>,
    alpha: f64,
) -> UserModel {
    let terms = records
        .iter()
        .filter(|r| &r.user_id == user_id && r.p < alpha && r.r > 0.0)
        .filter_map(|r| {
            let values = universe
                .iter()
                .map(|c| observations.value(c, r.page_class, r.indicator_kind));
            let (min, max) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
            (max > min).then_some(ModelTerm {
                indicator_kind: r.indicator_kind,
                page_class: r.page_class,
                weight: r.r,
                min,
                max,
            })
        })
        .collect();
    UserModel {
        user_id: user_id.clone(),
        terms,
    }
}

/// Predicted interest in `content` on [0, 1]. Values outside a term's range
/// are clamped to it.
pub fn predict_interest(
    model: &UserModel,
    observations: &ContentObservations,
    content: &ContentId,
) -> Result<Prediction, StatsError> {
    let terms = model
        .terms
        .iter()
        .map(|term| {
            let raw = observations
                .value(content, term.page_class, term.indicator_kind)
                .clamp(term.min, term.max);
            Ok((normalize_value(raw, term.min, term.max)?, term.weight))
        })
        .collect::<Result<Vec<_>, StatsError>>()?;
    Ok(Prediction {
        value: weighted_interest(&terms)?,
        terms_used: terms.len(),
    })
}
