//! Derivation of implicit interest indicators from a page timeline.
//!
//! Each derivation works on one (session, page) timeline and produces a
//! [`Tally`] of integer amounts per fragment. [`derive_indicators`] runs all of
//! them, drops kinds the device or configuration excludes and optionally adds
//! each fragment's amounts to its ancestors.

mod config;
mod contact;
mod forest;
mod gestures;
mod kind;
mod movement;
mod pointer;
mod text;
mod visibility;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use config::{ConfigError, IndicatorConfig};
pub use contact::derive_contact;
pub use forest::{propagate_to_ancestors, ForestError, FragmentForest};
pub use gestures::{completed_swipes, derive_orientation, derive_swipe, derive_zoom, SwipeSets};
pub use kind::{amount_to_value, IndicatorKind, IndicatorValue, Tally};
pub use movement::{
    classify_movement_segment, derive_movement_indicators, movement_segments, pointer_runs, MovementClass,
    MovementSegment, PointerSample,
};
pub use pointer::{derive_mouse_on_same_y, derive_mouse_over};
pub use text::derive_text_indicators;
pub use visibility::{derive_visibility, is_visible};

use crate::model::{DeviceClass, TimestampMs, UserId};
use crate::timeline::{segment_activity, ActivitySegmentation, Timeline, TimelineError, ViewportHistory};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub time: TimestampMs,
    pub message: String,
}

impl Diagnostic {
    pub fn new(time: TimestampMs, message: impl Into<String>) -> Self {
        Self {
            time,
            message: message.into(),
        }
    }
}

pub type Diagnostics = Vec<Diagnostic>;

#[derive(Debug, Error)]
pub enum IndicatorError {
    #[error(transparent)]
    Timeline(#[from] TimelineError),
    #[error(transparent)]
    Config(#[from] ConfigError),
}

/// A timeline together with its activity segmentation and layout history.
#[derive(Debug, Clone)]
pub struct TimelineView<'a> {
    pub timeline: &'a Timeline,
    pub activity: ActivitySegmentation,
    pub history: ViewportHistory,
}

impl<'a> TimelineView<'a> {
    pub fn new(timeline: &'a Timeline, passive_delta_ms: i64) -> Result<Self, TimelineError> {
        Ok(Self {
            timeline,
            activity: segment_activity(timeline, passive_delta_ms)?,
            history: ViewportHistory::from_timeline(timeline),
        })
    }

    /// Time of the last event.
    pub fn end(&self) -> TimestampMs {
        self.timeline.last_time().unwrap_or_default()
    }
}

#[derive(Debug, Clone, Default)]
pub struct Derivation {
    pub tally: Tally,
    pub values: Vec<IndicatorValue>,
    pub diagnostics: Diagnostics,
}

/// Runs every indicator derivation on one (session, page) timeline.
pub fn derive_indicators(
    timeline: &Timeline,
    user_id: &UserId,
    device: DeviceClass,
    forest: &FragmentForest,
    config: &IndicatorConfig,
) -> Result<Derivation, IndicatorError> {
    config.validate()?;
    let (Some(session_id), Some(page_id)) = (timeline.session_id(), timeline.page_id()) else {
        return Ok(Derivation::default());
    };
    let view = TimelineView::new(timeline, config.passive_delta_ms())?;
    let mut diagnostics = Diagnostics::new();
    let mut tally = derive_visibility(&view, config);
    tally.merge(derive_contact(&view, forest, device));
    tally.merge(derive_text_indicators(timeline));
    tally.merge(derive_zoom(timeline, config));
    match device {
        DeviceClass::Desktop => {
            tally.merge(derive_movement_indicators(&view, forest, config, &mut diagnostics));
            tally.merge(derive_mouse_over(&view, &mut diagnostics));
            tally.merge(derive_mouse_on_same_y(&view, config));
        }
        DeviceClass::Mobile => {
            tally.merge(derive_swipe(timeline, &mut diagnostics));
            tally.merge(derive_orientation(timeline, &mut diagnostics));
        }
    }
    tally.retain(|_, kind| kind.supports(device) && config.is_enabled(kind));
    let tally = propagate_to_ancestors(&tally, forest, config);
    for diagnostic in &diagnostics {
        tracing::debug!(session = %session_id, page = %page_id, time = diagnostic.time, "{}", diagnostic.message);
    }
    let values = tally.clone().into_values(user_id, session_id, page_id);
    Ok(Derivation {
        tally,
        values,
        diagnostics,
    })
}
