use super::{FragmentForest, IndicatorKind, Tally, TimelineView};
use crate::event::EventKind;
use crate::model::DeviceClass;

/// Clicks, taps and presses inside a fragment. On mobile each contact also
/// marks the other fragments on the same horizontal line.
pub fn derive_contact(view: &TimelineView<'_>, forest: &FragmentForest, device: DeviceClass) -> Tally {
    let mut tally = Tally::new();
    for event in view.timeline.events() {
        let EventKind::Contact {
            fragment_id, x, y, ..
        } = &event.kind
        else {
            continue;
        };
        let entry = view.history.viewport_at(event.client_time).ok();
        let target = fragment_id.as_ref().or_else(|| {
            entry.and_then(|entry| forest.innermost_at(&entry.fragment_rects, *x, *y))
        });
        if let Some(target) = target {
            tally.add(target, IndicatorKind::ContactInFragment, 1);
        }
        if device != DeviceClass::Mobile {
            continue;
        }
        let Some(entry) = entry else {
            continue;
        };
        for (id, rect) in &entry.fragment_rects {
            if Some(id) != target && rect.spans_y(*y) && !rect.contains_point(*x, *y) {
                tally.add(id, IndicatorKind::ContactOnSameYCount, 1);
            }
        }
    }
    tally
}
