use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::IndicatorKind;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("{field} must be positive, got {value}")]
    NotPositive { field: &'static str, value: f64 },
    #[error("{field} must lie in (0, 1], got {value}")]
    FractionOutOfRange { field: &'static str, value: f64 },
}

/// Thresholds and switches for indicator derivation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IndicatorConfig {
    pub enabled_kinds: BTreeSet<IndicatorKind>,
    pub propagate_to_ancestors: bool,
    /// Share of a fragment's area that must be in view.
    pub visibility_min_fraction: f64,
    /// For fragments taller than the viewport: share of the viewport they
    /// must cover instead.
    pub tall_fragment_viewport_fraction: f64,
    pub horiz_eps_y: f64,
    pub horiz_min_dx: f64,
    pub vert_eps_x: f64,
    pub vert_min_dy: f64,
    pub segment_gap_ms: i64,
    pub passive_delta_s: f64,
}

impl Default for IndicatorConfig {
    fn default() -> Self {
        Self {
            enabled_kinds: IndicatorKind::ALL.into_iter().collect(),
            propagate_to_ancestors: true,
            visibility_min_fraction: 0.5,
            tall_fragment_viewport_fraction: 0.5,
            horiz_eps_y: 10.0,
            horiz_min_dx: 40.0,
            vert_eps_x: 10.0,
            vert_min_dy: 40.0,
            segment_gap_ms: 300,
            passive_delta_s: 60.0,
        }
    }
}

impl IndicatorConfig {
    pub fn passive_delta_ms(&self) -> i64 {
        (self.passive_delta_s * 1000.0).round() as i64
    }

    pub fn is_enabled(&self, kind: IndicatorKind) -> bool {
        self.enabled_kinds.contains(&kind)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let positive = [
            ("horiz_eps_y", self.horiz_eps_y),
            ("horiz_min_dx", self.horiz_min_dx),
            ("vert_eps_x", self.vert_eps_x),
            ("vert_min_dy", self.vert_min_dy),
            ("segment_gap_ms", self.segment_gap_ms as f64),
            ("passive_delta_s", self.passive_delta_s),
        ];
        for (field, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(ConfigError::NotPositive { field, value });
            }
        }
        let fractions = [
            ("visibility_min_fraction", self.visibility_min_fraction),
            ("tall_fragment_viewport_fraction", self.tall_fragment_viewport_fraction),
        ];
        for (field, value) in fractions {
            if !(value > 0.0 && value <= 1.0) {
                return Err(ConfigError::FractionOutOfRange { field, value });
            }
        }
        Ok(())
    }
}
