//! Touch gestures: pinch zoom, swipes and orientation changes.

use std::collections::BTreeSet;

use super::visibility::is_visible;
use super::{Diagnostic, Diagnostics, IndicatorConfig, IndicatorKind, Tally};
use crate::event::{EventKind, Orientation, SwipeStage};
use crate::model::FragmentId;
use crate::timeline::Timeline;

/// Zooming in counts for every fragment visible afterwards; zooming out or a
/// unit scale counts nothing.
pub fn derive_zoom(timeline: &Timeline, config: &IndicatorConfig) -> Tally {
    let mut tally = Tally::new();
    for event in timeline.events() {
        let EventKind::Pinch {
            scale,
            viewport_after,
            fragment_rects,
        } = &event.kind
        else {
            continue;
        };
        if *scale <= 1.0 {
            continue;
        }
        for (id, rect) in fragment_rects {
            if is_visible(rect, viewport_after, config) {
                tally.add(id, IndicatorKind::ZoomCount, 1);
            }
        }
    }
    tally
}

/// Visible sets captured during one swipe.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SwipeSets {
    pub before: BTreeSet<FragmentId>,
    pub during: BTreeSet<FragmentId>,
    pub after: BTreeSet<FragmentId>,
}

impl SwipeSets {
    /// Fragments seen only while the swipe was under way.
    pub fn skipped(&self) -> BTreeSet<FragmentId> {
        self.during
            .iter()
            .filter(|id| !self.before.contains(*id) && !self.after.contains(*id))
            .cloned()
            .collect()
    }
}

/// Pairs start/during/end phases into completed swipes. A start without an
/// end is discarded; an end or during phase without a start is reported.
pub fn completed_swipes(timeline: &Timeline, diagnostics: &mut Diagnostics) -> Vec<SwipeSets> {
    let mut swipes = Vec::new();
    let mut open: Option<SwipeSets> = None;
    for event in timeline.events() {
        let EventKind::SwipePhase {
            phase,
            visible_fragments,
        } = &event.kind
        else {
            continue;
        };
        match phase {
            SwipeStage::Start => {
                if open.is_some() {
                    diagnostics.push(Diagnostic::new(
                        event.client_time,
                        "swipe started before the previous one ended; previous discarded",
                    ));
                }
                open = Some(SwipeSets {
                    before: visible_fragments.clone(),
                    ..SwipeSets::default()
                });
            }
            SwipeStage::During => match open.as_mut() {
                Some(swipe) => swipe.during.extend(visible_fragments.iter().cloned()),
                None => diagnostics.push(Diagnostic::new(
                    event.client_time,
                    "swipe progress without a start",
                )),
            },
            SwipeStage::End => match open.take() {
                Some(mut swipe) => {
                    swipe.after = visible_fragments.clone();
                    swipes.push(swipe);
                }
                None => diagnostics.push(Diagnostic::new(event.client_time, "swipe end without a start")),
            },
        }
    }
    if let Some(time) = open.and(timeline.last_time()) {
        diagnostics.push(Diagnostic::new(time, "timeline ended inside a swipe; swipe discarded"));
    }
    swipes
}

pub fn derive_swipe(timeline: &Timeline, diagnostics: &mut Diagnostics) -> Tally {
    let mut tally = Tally::new();
    for swipe in completed_swipes(timeline, diagnostics) {
        for id in &swipe.before {
            tally.add(id, IndicatorKind::SwipeVisibleBefore, 1);
        }
        for id in &swipe.after {
            tally.add(id, IndicatorKind::SwipeVisibleAfter, 1);
        }
        for id in &swipe.skipped() {
            tally.add(id, IndicatorKind::SwipeSkipped, 1);
        }
    }
    tally
}

/// Each change of orientation counts for the fragments visible afterwards;
/// a repeated orientation is not a change.
pub fn derive_orientation(timeline: &Timeline, diagnostics: &mut Diagnostics) -> Tally {
    let mut tally = Tally::new();
    let mut current: Option<Orientation> = None;
    for event in timeline.events() {
        let EventKind::Orientation {
            new_orientation,
            visible_fragments,
        } = &event.kind
        else {
            continue;
        };
        if current == Some(*new_orientation) {
            diagnostics.push(Diagnostic::new(event.client_time, "orientation unchanged; ignored"));
            continue;
        }
        current = Some(*new_orientation);
        let kind = match new_orientation {
            Orientation::Landscape => IndicatorKind::OrientationChangeLandscape,
            Orientation::Portrait => IndicatorKind::OrientationChangePortrait,
        };
        for id in visible_fragments {
            tally.add(id, kind, 1);
        }
    }
    tally
}
