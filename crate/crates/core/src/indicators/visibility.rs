use std::collections::BTreeSet;

use super::{IndicatorConfig, IndicatorKind, Tally, TimelineView};
use crate::model::{visibility_fraction, FragmentId, Rect};

/// A fragment counts as visible when enough of it is in view, or, for
/// fragments taller than the viewport, when it fills enough of the viewport.
pub fn is_visible(fragment: &Rect, viewport: &Rect, config: &IndicatorConfig) -> bool {
    let Ok(fraction) = visibility_fraction(fragment, viewport) else {
        return false;
    };
    if fraction >= config.visibility_min_fraction {
        return true;
    }
    let viewport_area = viewport.area();
    fragment.height > viewport.height
        && viewport_area > 0.0
        && fragment.intersection_area(viewport) / viewport_area >= config.tall_fragment_viewport_fraction
}

/// `visibility_count` counts hidden-to-visible transitions; `visibility_seconds`
/// accrues while visible, restricted to active intervals. Time before the
/// first geometry-bearing event is not attributed.
pub fn derive_visibility(view: &TimelineView<'_>, config: &IndicatorConfig) -> Tally {
    let mut tally = Tally::new();
    let mut previous: BTreeSet<&FragmentId> = BTreeSet::new();
    for (start, end, entry) in view.history.pieces(view.end()) {
        let current: BTreeSet<&FragmentId> = entry
            .fragment_rects
            .iter()
            .filter(|(_, rect)| is_visible(rect, &entry.viewport, config))
            .map(|(id, _)| id)
            .collect();
        let active = view.activity.active_overlap_ms(start, end);
        for id in &current {
            if !previous.contains(id) {
                tally.add(id, IndicatorKind::VisibilityCount, 1);
            }
            tally.add(id, IndicatorKind::VisibilitySeconds, active);
        }
        previous = current;
    }
    tally
}
