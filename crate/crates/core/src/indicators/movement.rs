use serde::{Deserialize, Serialize};

use super::{Diagnostic, Diagnostics, FragmentForest, IndicatorConfig, IndicatorKind, Tally, TimelineView};
use crate::event::EventKind;
use crate::model::TimestampMs;
use crate::timeline::Timeline;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointerSample {
    pub t: TimestampMs,
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MovementClass {
    Horizontal,
    Vertical,
    Random,
}

impl MovementClass {
    pub fn indicator(self) -> IndicatorKind {
        match self {
            MovementClass::Horizontal => IndicatorKind::HorizontalMovement,
            MovementClass::Vertical => IndicatorKind::VerticalMovement,
            MovementClass::Random => IndicatorKind::RandomMovement,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MovementSegment {
    pub points: Vec<PointerSample>,
    pub classification: MovementClass,
}

impl MovementSegment {
    pub fn start(&self) -> TimestampMs {
        self.points[0].t
    }

    /// Midpoint between the first and last sample.
    pub fn midpoint(&self) -> (f64, f64) {
        let first = self.points[0];
        let last = self.points[self.points.len() - 1];
        ((first.x + last.x) / 2.0, (first.y + last.y) / 2.0)
    }
}

/// Groups mouse-move samples into runs separated by pauses longer than
/// `gap_ms`. Runs of a single sample are included.
pub fn pointer_runs(timeline: &Timeline, gap_ms: i64) -> Vec<Vec<PointerSample>> {
    let mut runs: Vec<Vec<PointerSample>> = Vec::new();
    for event in timeline.events() {
        let EventKind::MouseMove { x, y } = event.kind else {
            continue;
        };
        let sample = PointerSample {
            t: event.client_time,
            x,
            y,
        };
        match runs.last_mut() {
            Some(run) if sample.t - run[run.len() - 1].t <= gap_ms => run.push(sample),
            _ => runs.push(vec![sample]),
        }
    }
    runs
}

/// Horizontal: the pointer stays within a band around its starting y and
/// travels far enough in x. Vertical is the transposed rule.
pub fn classify_movement_segment(points: &[PointerSample], config: &IndicatorConfig) -> MovementClass {
    let (Some(first), Some(last)) = (points.first(), points.last()) else {
        return MovementClass::Random;
    };
    let max_dy = points.iter().map(|p| (p.y - first.y).abs()).fold(0.0, f64::max);
    let max_dx = points.iter().map(|p| (p.x - first.x).abs()).fold(0.0, f64::max);
    if max_dy <= config.horiz_eps_y && (last.x - first.x).abs() >= config.horiz_min_dx {
        MovementClass::Horizontal
    } else if max_dx <= config.vert_eps_x && (last.y - first.y).abs() >= config.vert_min_dy {
        MovementClass::Vertical
    } else {
        MovementClass::Random
    }
}

pub fn movement_segments(timeline: &Timeline, config: &IndicatorConfig) -> Vec<MovementSegment> {
    pointer_runs(timeline, config.segment_gap_ms)
        .into_iter()
        .filter(|run| run.len() >= 2)
        .map(|points| {
            let classification = classify_movement_segment(&points, config);
            MovementSegment {
                points,
                classification,
            }
        })
        .collect()
}

/// Attributes each movement segment to the innermost fragment under its
/// midpoint, using the layout in effect when the segment started.
pub fn derive_movement_indicators(
    view: &TimelineView<'_>,
    forest: &FragmentForest,
    config: &IndicatorConfig,
    diagnostics: &mut Diagnostics,
) -> Tally {
    let mut tally = Tally::new();
    for segment in movement_segments(view.timeline, config) {
        let Ok(entry) = view.history.viewport_at(segment.start()) else {
            diagnostics.push(Diagnostic::new(
                segment.start(),
                "movement segment before any layout is known",
            ));
            continue;
        };
        let (x, y) = segment.midpoint();
        let Some(fragment) = forest.innermost_at(&entry.fragment_rects, x, y) else {
            continue;
        };
        tally.add(fragment, IndicatorKind::MoveInFragment, 1);
        tally.add(fragment, segment.classification.indicator(), 1);
    }
    tally
}
