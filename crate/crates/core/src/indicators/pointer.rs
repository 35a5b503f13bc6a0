//! Hover dwell and same-line attribution for a resting pointer.

use std::collections::{BTreeMap, BTreeSet};

use super::movement::pointer_runs;
use super::{Diagnostic, Diagnostics, IndicatorConfig, IndicatorKind, Tally, TimelineView};
use crate::event::EventKind;
use crate::model::{FragmentId, TimestampMs};

/// Counts enter events per fragment and sums enter-to-leave dwell clipped to
/// active intervals. A dwell left open closes at the end of the timeline.
pub fn derive_mouse_over(view: &TimelineView<'_>, diagnostics: &mut Diagnostics) -> Tally {
    let mut tally = Tally::new();
    let mut open: BTreeMap<FragmentId, TimestampMs> = BTreeMap::new();
    for event in view.timeline.events() {
        match &event.kind {
            EventKind::MouseEnter { fragment_id } => {
                tally.add(fragment_id, IndicatorKind::MouseOverFragmentCount, 1);
                tally.add(fragment_id, IndicatorKind::MouseOverFragmentSeconds, 0);
                open.entry(fragment_id.clone()).or_insert(event.client_time);
            }
            EventKind::MouseLeave { fragment_id } => match open.remove(fragment_id) {
                Some(entered) => {
                    let dwell = view.activity.active_overlap_ms(entered, event.client_time);
                    tally.add(fragment_id, IndicatorKind::MouseOverFragmentSeconds, dwell);
                }
                None => diagnostics.push(Diagnostic::new(
                    event.client_time,
                    format!("mouse_leave on {fragment_id} without a matching mouse_enter"),
                )),
            },
            _ => {}
        }
    }
    let end = view.end();
    for (fragment_id, entered) in open {
        let dwell = view.activity.active_overlap_ms(entered, end);
        tally.add(&fragment_id, IndicatorKind::MouseOverFragmentSeconds, dwell);
    }
    tally
}

#[derive(Debug, Clone, Copy)]
enum PointerPhase {
    Moving,
    /// Resting at a fixed offset from the viewport origin; `None` when no
    /// layout was known when the pointer stopped.
    Resting(Option<(f64, f64)>),
}

/// While the pointer rests, every fragment that spans the pointer's page y
/// without containing the pointer accrues time; entering that set counts
/// once. The pointer keeps its screen position, so scrolling moves it across
/// the page.
pub fn derive_mouse_on_same_y(view: &TimelineView<'_>, config: &IndicatorConfig) -> Tally {
    let runs = pointer_runs(view.timeline, config.segment_gap_ms);
    let end = view.end();
    let mut phases: Vec<(TimestampMs, TimestampMs, PointerPhase)> = Vec::new();
    for (i, run) in runs.iter().enumerate() {
        let first = run[0];
        let last = run[run.len() - 1];
        if last.t > first.t {
            phases.push((first.t, last.t, PointerPhase::Moving));
        }
        let rest_end = runs.get(i + 1).map_or(end, |next| next[0].t);
        let offset = view
            .history
            .viewport_at(last.t)
            .ok()
            .map(|entry| (last.x - entry.viewport.x, last.y - entry.viewport.y));
        phases.push((last.t, rest_end, PointerPhase::Resting(offset)));
    }

    let mut tally = Tally::new();
    let mut previous: BTreeSet<FragmentId> = BTreeSet::new();
    for (start, stop, phase) in phases {
        if stop <= start {
            continue;
        }
        let offset = match phase {
            PointerPhase::Resting(Some(offset)) => offset,
            PointerPhase::Moving | PointerPhase::Resting(None) => {
                previous.clear();
                continue;
            }
        };
        let mut cuts = vec![start];
        cuts.extend(view.history.change_points(start, stop));
        cuts.push(stop);
        for window in cuts.windows(2) {
            let (from, to) = (window[0], window[1]);
            if to <= from {
                continue;
            }
            let Ok(entry) = view.history.viewport_at(from) else {
                previous.clear();
                continue;
            };
            let px = entry.viewport.x + offset.0;
            let py = entry.viewport.y + offset.1;
            let current: BTreeSet<FragmentId> = entry
                .fragment_rects
                .iter()
                .filter(|(_, rect)| rect.spans_y(py) && !rect.contains_point(px, py))
                .map(|(id, _)| id.clone())
                .collect();
            let active = view.activity.active_overlap_ms(from, to);
            for id in &current {
                if !previous.contains(id) {
                    tally.add(id, IndicatorKind::MouseOnSameYCount, 1);
                }
                tally.add(id, IndicatorKind::MouseOnSameYSeconds, active);
            }
            previous = current;
        }
    }
    tally
}
