//! Event emission with ground truth kept alongside.
//!
//! The builder tracks what each emitted event means for every indicator using
//! its own integer layout model, so the truth it declares does not come from
//! the engine it is compared against.

use std::collections::BTreeSet;

use interest_core::event::{ClipboardAction, ContactKind, EventKind, Orientation, SwipeStage};
use interest_core::indicators::{IndicatorKind, IndicatorValue, Tally};
use interest_core::model::{ContentId, DeviceClass, ExplicitRating, FragmentId, Likert, PageId, TimestampMs};

use super::layout::{visible_in, IRect, PageLayout};
use crate::eventlog::{EventLog, LogRecord, SessionHeader};
use crate::ingest::IncomingEvent;

const PASSIVE_AFTER_MS: i64 = 60_000;
const RUN_GAP_MS: i64 = 300;
pub const STROKE_STEP_MS: i64 = 40;

#[derive(Debug, Clone, PartialEq)]
pub struct Synthesis {
    pub device: DeviceClass,
    pub log: EventLog,
    /// Indicator values the engine must reproduce, sorted.
    pub truth: Vec<IndicatorValue>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StrokeClass {
    Horizontal,
    Vertical,
    Random,
}

impl StrokeClass {
    fn kind(self) -> IndicatorKind {
        match self {
            StrokeClass::Horizontal => IndicatorKind::HorizontalMovement,
            StrokeClass::Vertical => IndicatorKind::VerticalMovement,
            StrokeClass::Random => IndicatorKind::RandomMovement,
        }
    }
}

struct Visit {
    layout: PageLayout,
    viewport: IRect,
    last_t: TimestampMs,
    pending: i64,
    visible: BTreeSet<FragmentId>,
    hovering: BTreeSet<FragmentId>,
    /// Screen offset of a resting pointer.
    resting: Option<(i64, i64)>,
    same_y: BTreeSet<FragmentId>,
    last_move: Option<TimestampMs>,
    orientation: Option<Orientation>,
    tally: Tally,
}

impl Visit {
    fn visible_now(&self) -> BTreeSet<FragmentId> {
        self.layout
            .cells
            .iter()
            .filter(|c| visible_in(&c.rect, &self.viewport))
            .map(|c| c.id.clone())
            .collect()
    }

    fn accrue(&mut self, gap: i64) {
        if gap > PASSIVE_AFTER_MS {
            return;
        }
        for id in &self.visible {
            self.tally.add(id, IndicatorKind::VisibilitySeconds, gap);
        }
        for id in &self.hovering {
            self.tally.add(id, IndicatorKind::MouseOverFragmentSeconds, gap);
        }
        for id in &self.same_y {
            self.tally.add(id, IndicatorKind::MouseOnSameYSeconds, gap);
        }
    }

    fn set_viewport(&mut self, viewport: IRect) {
        self.viewport = viewport;
        let now = self.visible_now();
        for id in &now {
            if !self.visible.contains(id) {
                self.tally.add(id, IndicatorKind::VisibilityCount, 1);
            }
            self.tally.add(id, IndicatorKind::VisibilitySeconds, 0);
        }
        self.visible = now;
        self.refresh_same_y();
    }

    fn refresh_same_y(&mut self) {
        let Some((sx, sy)) = self.resting else {
            return;
        };
        let (px, py) = (self.viewport.x + sx, self.viewport.y + sy);
        let now: BTreeSet<FragmentId> = self
            .layout
            .cells
            .iter()
            .filter(|c| c.rect.spans_y(py) && !c.rect.contains(px, py))
            .map(|c| c.id.clone())
            .collect();
        for id in &now {
            if !self.same_y.contains(id) {
                self.tally.add(id, IndicatorKind::MouseOnSameYCount, 1);
            }
            self.tally.add(id, IndicatorKind::MouseOnSameYSeconds, 0);
        }
        self.same_y = now;
    }
}

/// Builds one synthetic session page by page.
pub struct SessionBuilder {
    header: SessionHeader,
    device: DeviceClass,
    log: EventLog,
    declared: BTreeSet<PageId>,
    truth: Vec<IndicatorValue>,
    clock: TimestampMs,
    seq: u64,
    visit: Option<Visit>,
}

impl SessionBuilder {
    pub fn new(header: SessionHeader, device: DeviceClass) -> Self {
        let clock = header.started_at;
        let log = EventLog {
            records: vec![LogRecord::Session(header.clone())],
        };
        Self {
            header,
            device,
            log,
            declared: BTreeSet::new(),
            truth: Vec::new(),
            clock,
            seq: 0,
            visit: None,
        }
    }

    pub fn device(&self) -> DeviceClass {
        self.device
    }

    pub fn header(&self) -> &SessionHeader {
        &self.header
    }

    fn visit(&mut self) -> &mut Visit {
        self.visit.as_mut().expect("no page is open")
    }

    pub fn layout(&self) -> &PageLayout {
        &self.visit.as_ref().expect("no page is open").layout
    }

    pub fn viewport(&self) -> IRect {
        self.visit.as_ref().expect("no page is open").viewport
    }

    pub fn visible(&self) -> BTreeSet<FragmentId> {
        self.visit.as_ref().expect("no page is open").visible.clone()
    }

    /// Starts a page visit `after_ms` after the previous event, showing the
    /// top of the page. Each page may be visited once per session.
    pub fn open_page(&mut self, layout: PageLayout, after_ms: i64) {
        self.close_page();
        let page_id = layout.page_id().clone();
        assert!(self.declared.insert(page_id.clone()), "page {page_id} visited twice");
        self.log.records.push(LogRecord::Page(layout.page.clone()));
        self.log
            .records
            .extend(layout.fragments().into_iter().map(LogRecord::Fragment));
        let start = self.clock + after_ms.max(1);
        let viewport = layout.viewport(0);
        self.visit = Some(Visit {
            layout,
            viewport,
            last_t: start,
            pending: 0,
            visible: BTreeSet::new(),
            hovering: BTreeSet::new(),
            resting: None,
            same_y: BTreeSet::new(),
            last_move: None,
            orientation: None,
            tally: Tally::new(),
        });
        self.push_at(start, self.scroll_kind(viewport));
        self.visit().set_viewport(viewport);
    }

    /// Time passes before the next event.
    pub fn wait(&mut self, ms: i64) {
        self.visit().pending += ms.max(0);
    }

    fn push_at(&mut self, t: TimestampMs, kind: EventKind) {
        self.seq += 1;
        let event = IncomingEvent {
            kind,
            event_id: Some(format!("{}-{:05}", self.header.session_id, self.seq).into()),
            session_id: Some(self.header.session_id.clone()),
            page_id: Some(self.layout().page_id().clone()),
            client_time: t,
        };
        self.log.records.push(LogRecord::Event(event));
        self.clock = t;
    }

    /// Emits at least 1 ms after the previous event, settling accruals for
    /// the gap first.
    fn emit(&mut self, kind: EventKind) -> TimestampMs {
        let visit = self.visit();
        let t = visit.last_t + visit.pending.max(1);
        visit.accrue(t - visit.last_t);
        visit.last_t = t;
        visit.pending = 0;
        self.push_at(t, kind);
        t
    }

    fn scroll_kind(&self, viewport: IRect) -> EventKind {
        EventKind::Scroll {
            viewport: viewport.to_rect(),
            fragment_rects: self.layout().rects(),
        }
    }

    pub fn tick(&mut self) {
        self.emit(EventKind::KeyUp {
            selection_present: false,
        });
    }

    pub fn scroll_to(&mut self, top: i64) {
        let viewport = self.layout().viewport(top);
        self.emit(self.scroll_kind(viewport));
        self.visit().set_viewport(viewport);
    }

    /// Keeps a new pointer run apart from the previous one.
    fn separate_run(&mut self) {
        let visit = self.visit();
        if let Some(last_move) = visit.last_move {
            let earliest = last_move + RUN_GAP_MS + 1;
            let t = visit.last_t + visit.pending.max(1);
            if t < earliest {
                visit.pending = earliest - visit.last_t;
            }
        }
    }

    /// One pointer stroke over page points, 40 ms apart. `class` is what the
    /// points were constructed to be.
    pub fn stroke(&mut self, points: &[(i64, i64)], class: StrokeClass) {
        assert!(points.len() >= 2, "a stroke needs two points");
        self.separate_run();
        for (i, (x, y)) in points.iter().enumerate() {
            if i > 0 {
                self.wait(STROKE_STEP_MS);
            }
            let t = self.emit(EventKind::MouseMove {
                x: *x as f64,
                y: *y as f64,
            });
            let visit = self.visit();
            visit.last_move = Some(t);
            if i == 0 {
                visit.resting = None;
                visit.same_y.clear();
            }
        }
        let (x0, y0) = points[0];
        let (x1, y1) = points[points.len() - 1];
        let visit = self.visit();
        if let Some(cell) = visit.layout.innermost_at_doubled(x0 + x1, y0 + y1) {
            let id = cell.id.clone();
            visit.tally.add(&id, IndicatorKind::MoveInFragment, 1);
            visit.tally.add(&id, class.kind(), 1);
        }
        visit.resting = Some((x1 - visit.viewport.x, y1 - visit.viewport.y));
        visit.refresh_same_y();
    }

    /// A single pointer sample: the pointer comes to rest without a stroke.
    pub fn park(&mut self, x: i64, y: i64) {
        self.separate_run();
        let t = self.emit(EventKind::MouseMove {
            x: x as f64,
            y: y as f64,
        });
        let visit = self.visit();
        visit.last_move = Some(t);
        visit.resting = Some((x - visit.viewport.x, y - visit.viewport.y));
        visit.refresh_same_y();
    }

    pub fn enter(&mut self, id: &FragmentId) {
        self.emit(EventKind::MouseEnter {
            fragment_id: id.clone(),
        });
        let visit = self.visit();
        visit.hovering.insert(id.clone());
        visit.tally.add(id, IndicatorKind::MouseOverFragmentCount, 1);
        visit.tally.add(id, IndicatorKind::MouseOverFragmentSeconds, 0);
    }

    pub fn leave(&mut self, id: &FragmentId) {
        assert!(self.visit().hovering.contains(id), "leave without enter");
        self.emit(EventKind::MouseLeave {
            fragment_id: id.clone(),
        });
        self.visit().hovering.remove(id);
    }

    /// Click or tap at a page point kept off fragment edges.
    pub fn contact(&mut self, x: i64, y: i64) {
        let contact_kind = match self.device {
            DeviceClass::Desktop => ContactKind::Click,
            DeviceClass::Mobile => ContactKind::Tap,
        };
        self.emit(EventKind::Contact {
            fragment_id: None,
            x: x as f64,
            y: y as f64,
            contact_kind,
        });
        let mobile = self.device == DeviceClass::Mobile;
        let visit = self.visit();
        let target = visit.layout.innermost_at(x, y).map(|c| c.id.clone());
        if let Some(id) = &target {
            visit.tally.add(id, IndicatorKind::ContactInFragment, 1);
        }
        if mobile {
            let marked: Vec<FragmentId> = visit
                .layout
                .cells
                .iter()
                .filter(|c| Some(&c.id) != target.as_ref() && c.rect.spans_y(y) && !c.rect.contains(x, y))
                .map(|c| c.id.clone())
                .collect();
            for id in marked {
                visit.tally.add(&id, IndicatorKind::ContactOnSameYCount, 1);
            }
        }
    }

    pub fn select(&mut self, id: &FragmentId, text_length: u32) {
        self.emit(EventKind::Selection {
            fragment_id: id.clone(),
            text_length,
        });
        if text_length > 0 {
            self.visit().tally.add(id, IndicatorKind::SelectCount, 1);
        }
    }

    pub fn copy(&mut self, id: &FragmentId, cut: bool) {
        self.emit(EventKind::Clipboard {
            fragment_id: id.clone(),
            action: if cut { ClipboardAction::Cut } else { ClipboardAction::Copy },
            text_length: 12,
        });
        self.visit().tally.add(id, IndicatorKind::CutCopyCount, 1);
    }

    /// Zooms onto one cell so that it fills the view.
    pub fn pinch_in(&mut self, id: &FragmentId) {
        let rect = self.layout().cell(id).expect("unknown cell").rect;
        self.emit(EventKind::Pinch {
            scale: 2.0,
            viewport_after: rect.to_rect(),
            fragment_rects: self.layout().rects(),
        });
        let visit = self.visit();
        visit.set_viewport(rect);
        for id in visit.visible.clone() {
            visit.tally.add(&id, IndicatorKind::ZoomCount, 1);
        }
    }

    /// Zooms back out to the regular viewport at `top`.
    pub fn pinch_out(&mut self, top: i64) {
        let viewport = self.layout().viewport(top);
        self.emit(EventKind::Pinch {
            scale: 0.5,
            viewport_after: viewport.to_rect(),
            fragment_rects: self.layout().rects(),
        });
        self.visit().set_viewport(viewport);
    }

    /// A swipe from the current offset through `tops`; the last entry is
    /// where it ends. Scroll geometry is reported at every step.
    pub fn swipe(&mut self, tops: &[i64]) {
        let (Some((&end, during)), true) = (tops.split_last(), !tops.is_empty()) else {
            return;
        };
        let before = self.visible();
        self.emit(EventKind::SwipePhase {
            phase: SwipeStage::Start,
            visible_fragments: before.clone(),
        });
        let mut seen = BTreeSet::new();
        for &top in during {
            self.wait(60);
            self.scroll_to(top);
            let now = self.visible();
            seen.extend(now.iter().cloned());
            self.wait(1);
            self.emit(EventKind::SwipePhase {
                phase: SwipeStage::During,
                visible_fragments: now,
            });
        }
        self.wait(60);
        self.scroll_to(end);
        let after = self.visible();
        self.wait(1);
        self.emit(EventKind::SwipePhase {
            phase: SwipeStage::End,
            visible_fragments: after.clone(),
        });
        let tally = &mut self.visit().tally;
        for id in &before {
            tally.add(id, IndicatorKind::SwipeVisibleBefore, 1);
        }
        for id in &after {
            tally.add(id, IndicatorKind::SwipeVisibleAfter, 1);
        }
        for id in seen.iter().filter(|id| !before.contains(*id) && !after.contains(*id)) {
            tally.add(id, IndicatorKind::SwipeSkipped, 1);
        }
    }

    pub fn orientation(&mut self, orientation: Orientation) {
        let visible = self.visible();
        self.emit(EventKind::Orientation {
            new_orientation: orientation,
            visible_fragments: visible.clone(),
        });
        let visit = self.visit();
        if visit.orientation == Some(orientation) {
            return;
        }
        visit.orientation = Some(orientation);
        let kind = match orientation {
            Orientation::Landscape => IndicatorKind::OrientationChangeLandscape,
            Orientation::Portrait => IndicatorKind::OrientationChangePortrait,
        };
        for id in &visible {
            visit.tally.add(id, kind, 1);
        }
    }

    pub fn rate(&mut self, content: ContentId, likert: Option<u8>) {
        self.log.records.push(LogRecord::Rating(ExplicitRating {
            user_id: self.header.user_id.clone(),
            content_id: content,
            noticed: likert.is_some(),
            likert: likert.map(|l| Likert::new(i64::from(l)).expect("likert in range")),
        }));
    }

    fn close_page(&mut self) {
        if self.visit.is_none() {
            return;
        }
        self.wait(200);
        self.tick();
        let visit = self.visit.take().expect("checked above");
        let mut tally = Tally::new();
        for (id, kind, amount) in visit.tally.iter() {
            if !kind.supports(self.device) {
                continue;
            }
            tally.add(id, kind, amount);
            let mut parent = visit.layout.parents().find(|(child, _)| *child == id).map(|(_, p)| p);
            while let Some(p) = parent {
                tally.add(p, kind, amount);
                parent = visit.layout.parents().find(|(child, _)| *child == p).map(|(_, p)| p);
            }
        }
        let page_id = visit.layout.page_id().clone();
        self.truth
            .extend(tally.into_values(&self.header.user_id, &self.header.session_id, &page_id));
    }

    pub fn finish(mut self) -> Synthesis {
        self.close_page();
        self.truth.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
        Synthesis {
            device: self.device,
            log: self.log,
            truth: self.truth,
        }
    }
}
