use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use statrs::function::beta::checked_beta_reg;

use super::{ContentObservations, StatsError};
use crate::indicators::IndicatorKind;
use crate::model::{ContentId, ExplicitRating, PageClass, UserId};

/// Pearson product-moment correlation of two equally long series.
pub fn pearson_r(xs: &[f64], ys: &[f64]) -> Result<f64, StatsError> {
    if xs.len() != ys.len() {
        return Err(StatsError::LengthMismatch(xs.len(), ys.len()));
    }
    let n = xs.len();
    if n < 2 {
        return Err(StatsError::TooFewSamples { needed: 2, got: n });
    }
    let mean_x = xs.iter().sum::<f64>() / n as f64;
    let mean_y = ys.iter().sum::<f64>() / n as f64;
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let dx = x - mean_x;
        let dy = y - mean_y;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(StatsError::ConstantSeries);
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Two-tailed p-value of `r` over `n` pairs, from the Student-t transform
/// `t = r * sqrt((n - 2) / (1 - r^2))` with `n - 2` degrees of freedom.
pub fn p_two_tailed(r: f64, n: usize) -> Result<f64, StatsError> {
    if n < 3 {
        return Err(StatsError::TooFewSamples { needed: 3, got: n });
    }
    if !r.is_finite() || r.abs() > 1.0 {
        return Err(StatsError::InvalidCorrelation(r));
    }
    if r.abs() == 1.0 {
        return Ok(0.0);
    }
    if r == 0.0 {
        return Ok(1.0);
    }
    let df = (n - 2) as f64;
    let r2 = r * r;
    let t2 = r2 * df / (1.0 - r2);
    // P(|T| >= |t|) = I_{df / (df + t^2)}(df / 2, 1 / 2)
    let x = df / (df + t2);
    let p = checked_beta_reg(df / 2.0, 0.5, x).map_err(|_| StatsError::InvalidCorrelation(r))?;
    Ok(p.clamp(0.0, 1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationRecord {
    pub user_id: UserId,
    pub indicator_kind: IndicatorKind,
    pub page_class: PageClass,
    pub r: f64,
    pub p: f64,
    pub n: usize,
}

/// Correlates each indicator with the user's ratings, separately per page
/// class. Only rated content takes part; rated content without activity
/// contributes 0. Records need at least three pairs and a defined r.
pub fn user_correlations(
    user_id: &UserId,
    observations: &ContentObservations,
    ratings: &[ExplicitRating],
) -> Vec<CorrelationRecord> {
    let rated: BTreeMap<&ContentId, f64> = ratings
        .iter()
        .filter(|r| &r.user_id == user_id && r.noticed)
        .filter_map(|r| r.likert.map(|l| (&r.content_id, f64::from(l.value()))))
        .collect();
    if rated.len() < 3 {
        return Vec::new();
    }
    let ys: Vec<f64> = rated.values().copied().collect();
    let series: BTreeSet<(PageClass, IndicatorKind)> = observations.series().collect();
    let mut records = Vec::new();
    for (page_class, kind) in series {
        let xs: Vec<f64> = rated
            .keys()
            .map(|content| observations.value(content, page_class, kind))
            .collect();
        let Ok(r) = pearson_r(&xs, &ys) else {
            continue;
        };
        let Ok(p) = p_two_tailed(r, xs.len()) else {
            continue;
        };
        records.push(CorrelationRecord {
            user_id: user_id.clone(),
            indicator_kind: kind,
            page_class,
            r,
            p,
            n: xs.len(),
        });
    }
    records
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Likert;

    #[test]
    fn pearson_examples() {
        assert!((pearson_r(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]).unwrap() - 1.0).abs() < 1e-15);
        assert!((pearson_r(&[1.0, 2.0, 3.0], &[6.0, 4.0, 2.0]).unwrap() + 1.0).abs() < 1e-15);
        // cov sum 4, variance sums 5 and 5
        assert!((pearson_r(&[1.0, 2.0, 3.0, 4.0], &[1.0, 3.0, 2.0, 4.0]).unwrap() - 0.8).abs() < 1e-15);
    }

    #[test]
    fn pearson_errors() {
        assert_eq!(pearson_r(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]), Err(StatsError::ConstantSeries));
        assert_eq!(pearson_r(&[1.0], &[1.0]), Err(StatsError::TooFewSamples { needed: 2, got: 1 }));
        assert_eq!(pearson_r(&[1.0, 2.0], &[1.0]), Err(StatsError::LengthMismatch(2, 1)));
    }

    #[test]
    fn p_value_examples() {
        assert_eq!(p_two_tailed(0.0, 10).unwrap(), 1.0);
        assert_eq!(p_two_tailed(1.0, 5).unwrap(), 0.0);
        assert_eq!(p_two_tailed(-1.0, 5).unwrap(), 0.0);
        // t = 0.8 * sqrt(2 / 0.36) = 1.8856, df = 2: p = 1 - t / sqrt(2 + t^2)
        let t: f64 = 0.8 * (2.0f64 / 0.36).sqrt();
        let closed_form = 1.0 - t / (2.0 + t * t).sqrt();
        let p = p_two_tailed(0.8, 4).unwrap();
        assert!((p - closed_form).abs() < 1e-12, "{p} vs {closed_form}");
        assert!((p - 0.2).abs() < 0.001);
        assert!(p_two_tailed(0.5, 2).is_err());
    }

    fn rating(content: &str, likert: i64) -> ExplicitRating {
        ExplicitRating {
            user_id: "u".into(),
            content_id: content.into(),
            noticed: true,
            likert: Some(Likert::new(likert).unwrap()),
        }
    }

    #[test]
    fn monotone_values_correlate_perfectly() {
        let mut obs = ContentObservations::default();
        let ratings: Vec<_> = (1..=5).map(|i| rating(&format!("c{i}"), i)).collect();
        for i in 1..=5 {
            obs.add(&format!("c{i}").into(), PageClass::Detail, IndicatorKind::VisibilitySeconds, 3.0 * i as f64 + 1.0);
        }
        let records = user_correlations(&"u".into(), &obs, &ratings);
        assert_eq!(records.len(), 1);
        assert!((records[0].r - 1.0).abs() < 1e-12);
        assert_eq!(records[0].n, 5);
    }

    #[test]
    fn too_few_ratings_or_constant_values() {
        let mut obs = ContentObservations::default();
        obs.add(&"c1".into(), PageClass::Detail, IndicatorKind::SelectCount, 1.0);
        obs.add(&"c2".into(), PageClass::Detail, IndicatorKind::SelectCount, 2.0);
        let two = [rating("c1", 2), rating("c2", 5)];
        assert!(user_correlations(&"u".into(), &obs, &two).is_empty());

        let mut flat = ContentObservations::default();
        for c in ["c1", "c2", "c3"] {
            flat.add(&c.into(), PageClass::Overview, IndicatorKind::ZoomCount, 1.0);
        }
        let three = [rating("c1", 2), rating("c2", 5), rating("c3", 7)];
        assert!(user_correlations(&"u".into(), &flat, &three).is_empty());
    }

    #[test]
    fn rated_without_activity_counts_as_zero() {
        let mut obs = ContentObservations::default();
        obs.add(&"c2".into(), PageClass::Detail, IndicatorKind::ContactInFragment, 1.0);
        obs.add(&"c3".into(), PageClass::Detail, IndicatorKind::ContactInFragment, 2.0);
        let ratings = [rating("c1", 1), rating("c2", 4), rating("c3", 7)];
        let records = user_correlations(&"u".into(), &obs, &ratings);
        assert_eq!(records.len(), 1);
        assert_eq!(records[0].n, 3);
        assert!((records[0].r - 1.0).abs() < 1e-12);
    }
}
