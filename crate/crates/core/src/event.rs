//! Client-captured interaction events.
//!
//! On the wire an event is a flat JSON object whose `type` field selects the
//! variant; the variant's payload fields sit next to the common fields.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::model::{EventId, FragmentId, PageId, Rect, SessionId, TimestampMs};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContactKind {
    Click,
    Tap,
    Press,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClipboardAction {
    Cut,
    Copy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SwipeStage {
    Start,
    During,
    End,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    Portrait,
    Landscape,
}

pub type FragmentRects = BTreeMap<FragmentId, Rect>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum EventKind {
    Scroll {
        viewport: Rect,
        #[serde(default)]
        fragment_rects: FragmentRects,
    },
    MouseMove {
        x: f64,
        y: f64,
    },
    MouseEnter {
        fragment_id: FragmentId,
    },
    MouseLeave {
        fragment_id: FragmentId,
    },
    Contact {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        fragment_id: Option<FragmentId>,
        x: f64,
        y: f64,
        contact_kind: ContactKind,
    },
    KeyUp {
        selection_present: bool,
    },
    Selection {
        fragment_id: FragmentId,
        text_length: u32,
    },
    Clipboard {
        fragment_id: FragmentId,
        action: ClipboardAction,
        #[serde(default)]
        text_length: u32,
    },
    Pinch {
        scale: f64,
        viewport_after: Rect,
        #[serde(default)]
        fragment_rects: FragmentRects,
    },
    SwipePhase {
        phase: SwipeStage,
        #[serde(default)]
        visible_fragments: BTreeSet<FragmentId>,
    },
    Orientation {
        new_orientation: Orientation,
        #[serde(default)]
        visible_fragments: BTreeSet<FragmentId>,
    },
}

impl EventKind {
    pub fn type_name(&self) -> &'static str {
        match self {
            EventKind::Scroll { .. } => "scroll",
            EventKind::MouseMove { .. } => "mouse_move",
            EventKind::MouseEnter { .. } => "mouse_enter",
            EventKind::MouseLeave { .. } => "mouse_leave",
            EventKind::Contact { .. } => "contact",
            EventKind::KeyUp { .. } => "key_up",
            EventKind::Selection { .. } => "selection",
            EventKind::Clipboard { .. } => "clipboard",
            EventKind::Pinch { .. } => "pinch",
            EventKind::SwipePhase { .. } => "swipe_phase",
            EventKind::Orientation { .. } => "orientation",
        }
    }

    pub const TYPE_NAMES: [&'static str; 11] = [
        "scroll",
        "mouse_move",
        "mouse_enter",
        "mouse_leave",
        "contact",
        "key_up",
        "selection",
        "clipboard",
        "pinch",
        "swipe_phase",
        "orientation",
    ];

    /// Viewport and fragment layout carried by the event, if any.
    pub fn geometry(&self) -> Option<(&Rect, &FragmentRects)> {
        match self {
            EventKind::Scroll {
                viewport,
                fragment_rects,
            } => Some((viewport, fragment_rects)),
            EventKind::Pinch {
                viewport_after,
                fragment_rects,
                ..
            } => Some((viewport_after, fragment_rects)),
            _ => None,
        }
    }

    /// Every fragment id the payload refers to.
    pub fn referenced_fragments(&self) -> Vec<&FragmentId> {
        match self {
            EventKind::Scroll { fragment_rects, .. } | EventKind::Pinch { fragment_rects, .. } => {
                fragment_rects.keys().collect()
            }
            EventKind::MouseEnter { fragment_id }
            | EventKind::MouseLeave { fragment_id }
            | EventKind::Selection { fragment_id, .. }
            | EventKind::Clipboard { fragment_id, .. } => vec![fragment_id],
            EventKind::Contact { fragment_id, .. } => fragment_id.iter().collect(),
            EventKind::SwipePhase {
                visible_fragments, ..
            }
            | EventKind::Orientation {
                visible_fragments, ..
            } => visible_fragments.iter().collect(),
            EventKind::MouseMove { .. } | EventKind::KeyUp { .. } => Vec::new(),
        }
    }

    /// Checks numeric payload constraints: finite coordinates, non-negative
    /// rect extents and a positive pinch scale.
    pub fn validate(&self) -> Result<(), String> {
        let check_rect = |what: &str, rect: &Rect| {
            if rect.is_valid() {
                Ok(())
            } else {
                Err(format!("{what} must have finite coordinates and non-negative size"))
            }
        };
        let check_rects = |rects: &FragmentRects| {
            rects
                .iter()
                .try_for_each(|(id, rect)| check_rect(&format!("rect of fragment {id}"), rect))
        };
        let check_point = |x: f64, y: f64| {
            if x.is_finite() && y.is_finite() {
                Ok(())
            } else {
                Err("coordinates must be finite".to_owned())
            }
        };
        match self {
            EventKind::Scroll {
                viewport,
                fragment_rects,
            } => {
                check_rect("viewport", viewport)?;
                check_rects(fragment_rects)
            }
            EventKind::Pinch {
                scale,
                viewport_after,
                fragment_rects,
            } => {
                if !(scale.is_finite() && *scale > 0.0) {
                    return Err(format!("pinch scale must be positive, got {scale}"));
                }
                check_rect("viewport_after", viewport_after)?;
                check_rects(fragment_rects)
            }
            EventKind::MouseMove { x, y } | EventKind::Contact { x, y, .. } => check_point(*x, *y),
            _ => Ok(()),
        }
    }
}

/// A single captured interaction, scoped to a session and page.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawEvent {
    #[serde(flatten)]
    pub kind: EventKind,
    pub event_id: EventId,
    pub session_id: SessionId,
    pub page_id: PageId,
    pub client_time: TimestampMs,
}
