#![allow(dead_code)]

use interest_core::event::{EventKind, FragmentRects, RawEvent};
use interest_core::model::Rect;

pub fn event(seq: usize, t: i64, kind: EventKind) -> RawEvent {
    RawEvent {
        kind,
        event_id: format!("e{seq}").into(),
        session_id: "s".into(),
        page_id: "p".into(),
        client_time: t,
    }
}

pub fn key_up() -> EventKind {
    EventKind::KeyUp {
        selection_present: false,
    }
}

/// Four stacked 1000x300 fragments starting at y = 0.
pub fn stacked_rects() -> FragmentRects {
    (0..4)
        .map(|i| (format!("f{i}").into(), Rect::new(0.0, 300.0 * i as f64, 1000.0, 300.0)))
        .collect()
}

pub fn scroll(top: f64, height: f64) -> EventKind {
    EventKind::Scroll {
        viewport: Rect::new(0.0, top, 1000.0, height),
        fragment_rects: stacked_rects(),
    }
}

/// Overlap of two closed intervals, computed directly.
pub fn overlap(a0: f64, a1: f64, b0: f64, b1: f64) -> f64 {
    (a1.min(b1) - a0.max(b0)).max(0.0)
}
