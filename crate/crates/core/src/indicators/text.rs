use super::{IndicatorKind, Tally};
use crate::event::EventKind;
use crate::timeline::Timeline;

/// Non-empty selections and clipboard actions; cut counts as copy.
pub fn derive_text_indicators(timeline: &Timeline) -> Tally {
    let mut tally = Tally::new();
    for event in timeline.events() {
        match &event.kind {
            EventKind::Selection {
                fragment_id,
                text_length,
            } if *text_length > 0 => tally.add(fragment_id, IndicatorKind::SelectCount, 1),
            EventKind::Clipboard { fragment_id, .. } => {
                tally.add(fragment_id, IndicatorKind::CutCopyCount, 1)
            }
            _ => {}
        }
    }
    tally
}
