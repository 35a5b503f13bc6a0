//! Per-(session, page) timelines, active/passive segmentation and the
//! viewport geometry step function.

use std::collections::HashSet;

use thiserror::Error;

use crate::event::{FragmentRects, RawEvent};
use crate::model::{PageId, Rect, SessionId, TimestampMs};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TimelineError {
    #[error("timeline mixes sessions {0} and {1}")]
    MixedSessions(SessionId, SessionId),
    #[error("timeline mixes pages {0} and {1}")]
    MixedPages(PageId, PageId),
    #[error("timeline is empty")]
    Empty,
    #[error("no geometry known at {0} ms")]
    GeometryUnknown(TimestampMs),
}

/// Events of one (session, page), ordered by client time with arrival order
/// as tiebreak and without duplicate event ids.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Timeline {
    events: Vec<RawEvent>,
}

impl Timeline {
    pub fn events(&self) -> &[RawEvent] {
        &self.events
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn session_id(&self) -> Option<&SessionId> {
        self.events.first().map(|e| &e.session_id)
    }

    pub fn page_id(&self) -> Option<&PageId> {
        self.events.first().map(|e| &e.page_id)
    }

    pub fn first_time(&self) -> Option<TimestampMs> {
        self.events.first().map(|e| e.client_time)
    }

    pub fn last_time(&self) -> Option<TimestampMs> {
        self.events.last().map(|e| e.client_time)
    }
}

/// Sorts events by client time (stable, so arrival order breaks ties) and
/// drops repeated event ids, keeping the first arrival.
pub fn build_timeline(events: impl IntoIterator<Item = RawEvent>) -> Result<Timeline, TimelineError> {
    let mut seen = HashSet::new();
    let mut kept: Vec<RawEvent> = Vec::new();
    for event in events {
        if let Some(first) = kept.first() {
            if first.session_id != event.session_id {
                return Err(TimelineError::MixedSessions(
                    first.session_id.clone(),
                    event.session_id,
                ));
            }
            if first.page_id != event.page_id {
                return Err(TimelineError::MixedPages(first.page_id.clone(), event.page_id));
            }
        }
        if seen.insert(event.event_id.clone()) {
            kept.push(event);
        }
    }
    kept.sort_by_key(|e| e.client_time);
    Ok(Timeline { events: kept })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Interval {
    pub start: TimestampMs,
    pub end: TimestampMs,
}

impl Interval {
    pub fn len_ms(&self) -> i64 {
        self.end - self.start
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActivitySegmentation {
    pub active: Vec<Interval>,
    pub passive: Vec<Interval>,
    pub delta_ms: i64,
}

impl ActivitySegmentation {
    pub fn active_total_ms(&self) -> i64 {
        self.active.iter().map(Interval::len_ms).sum()
    }

    pub fn passive_total_ms(&self) -> i64 {
        self.passive.iter().map(Interval::len_ms).sum()
    }

    /// Length of `[start, end]` covered by active intervals.
    pub fn active_overlap_ms(&self, start: TimestampMs, end: TimestampMs) -> i64 {
        if end <= start {
            return 0;
        }
        let first = self.active.partition_point(|i| i.end <= start);
        self.active[first..]
            .iter()
            .take_while(|i| i.start < end)
            .map(|i| (end.min(i.end) - start.max(i.start)).max(0))
            .sum()
    }
}

/// Splits the timeline at inter-event gaps strictly longer than `delta_ms`.
pub fn segment_activity(timeline: &Timeline, delta_ms: i64) -> Result<ActivitySegmentation, TimelineError> {
    segment_times(timeline.events.iter().map(|e| e.client_time), delta_ms)
}

/// Same as [`segment_activity`] over bare, sorted timestamps.
pub fn segment_times(
    times: impl IntoIterator<Item = TimestampMs>,
    delta_ms: i64,
) -> Result<ActivitySegmentation, TimelineError> {
    let mut times = times.into_iter();
    let first = times.next().ok_or(TimelineError::Empty)?;
    let mut active = Vec::new();
    let mut passive = Vec::new();
    let mut run_start = first;
    let mut prev = first;
    for t in times {
        debug_assert!(t >= prev, "timestamps must be sorted");
        if t - prev > delta_ms {
            active.push(Interval {
                start: run_start,
                end: prev,
            });
            passive.push(Interval { start: prev, end: t });
            run_start = t;
        }
        prev = t;
    }
    active.push(Interval {
        start: run_start,
        end: prev,
    });
    Ok(ActivitySegmentation {
        active,
        passive,
        delta_ms,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeometryEntry {
    pub time: TimestampMs,
    pub viewport: Rect,
    pub fragment_rects: FragmentRects,
}

/// Step function of viewport and fragment layout over time.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ViewportHistory {
    entries: Vec<GeometryEntry>,
}

impl ViewportHistory {
    /// Collects geometry from scroll and pinch events. Of several entries at
    /// the same instant the last one wins.
    pub fn from_timeline(timeline: &Timeline) -> Self {
        let mut entries: Vec<GeometryEntry> = Vec::new();
        for event in timeline.events() {
            let Some((viewport, rects)) = event.kind.geometry() else {
                continue;
            };
            let entry = GeometryEntry {
                time: event.client_time,
                viewport: *viewport,
                fragment_rects: rects.clone(),
            };
            match entries.last_mut() {
                Some(last) if last.time == entry.time => *last = entry,
                _ => entries.push(entry),
            }
        }
        Self { entries }
    }

    pub fn entries(&self) -> &[GeometryEntry] {
        &self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Latest entry at or before `t`.
    pub fn viewport_at(&self, t: TimestampMs) -> Result<&GeometryEntry, TimelineError> {
        let idx = self.entries.partition_point(|e| e.time <= t);
        if idx == 0 {
            Err(TimelineError::GeometryUnknown(t))
        } else {
            Ok(&self.entries[idx - 1])
        }
    }

    /// Constant-geometry pieces `[start, end)` up to `until`.
    pub fn pieces(&self, until: TimestampMs) -> impl Iterator<Item = (TimestampMs, TimestampMs, &GeometryEntry)> {
        self.entries.iter().enumerate().map(move |(i, entry)| {
            let end = self.entries.get(i + 1).map_or(until, |next| next.time);
            (entry.time, end.max(entry.time), entry)
        })
    }

    /// Entry times strictly inside `(start, end)`.
    pub fn change_points(&self, start: TimestampMs, end: TimestampMs) -> impl Iterator<Item = TimestampMs> + '_ {
        let from = self.entries.partition_point(|e| e.time <= start);
        self.entries[from..]
            .iter()
            .map(|e| e.time)
            .take_while(move |t| *t < end)
    }
}
