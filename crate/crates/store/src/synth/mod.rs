//! Seeded synthetic sessions with known indicator values.

mod builder;
pub mod layout;

use std::fmt;
use std::str::FromStr;

use interest_core::event::Orientation;
use interest_core::model::{DeviceClass, FragmentId, ParseEnumError};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub use builder::{SessionBuilder, StrokeClass, Synthesis, STROKE_STEP_MS};
use layout::{article_layout, content_of, overview_layout, PageLayout, ARTICLE_COUNT};

use crate::eventlog::SessionHeader;

pub const DESKTOP_UA: &str = "Mozilla/5.0 (X11; Linux x86_64; rv:128.0) Gecko/20100101 Firefox/128.0";
pub const MOBILE_UA: &str =
    "Mozilla/5.0 (iPhone; CPU iPhone OS 17_4 like Mac OS X) AppleWebKit/605.1.15 Mobile/15E148";

const EPOCH_MS: i64 = 1_700_000_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Archetype {
    MinimalInteractor,
    ContinuousScroller,
    PointerReader,
    SameYParker,
    MobileSwiper,
}

impl Archetype {
    pub const ALL: [Archetype; 5] = [
        Archetype::MinimalInteractor,
        Archetype::ContinuousScroller,
        Archetype::PointerReader,
        Archetype::SameYParker,
        Archetype::MobileSwiper,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Archetype::MinimalInteractor => "minimal-interactor",
            Archetype::ContinuousScroller => "continuous-scroller",
            Archetype::PointerReader => "pointer-reader",
            Archetype::SameYParker => "same-y-parker",
            Archetype::MobileSwiper => "mobile-swiper",
        }
    }

    pub fn device(self) -> DeviceClass {
        match self {
            Archetype::MobileSwiper => DeviceClass::Mobile,
            _ => DeviceClass::Desktop,
        }
    }

    fn salt(self) -> u64 {
        (self as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
    }
}

impl fmt::Display for Archetype {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Archetype {
    type Err = ParseEnumError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Archetype::ALL
            .into_iter()
            .find(|a| a.as_str() == s)
            .ok_or_else(|| ParseEnumError::new("archetype", s))
    }
}

pub fn session_header(archetype: Archetype, seed: u64) -> SessionHeader {
    let ua = match archetype.device() {
        DeviceClass::Desktop => DESKTOP_UA,
        DeviceClass::Mobile => MOBILE_UA,
    };
    SessionHeader {
        session_id: format!("s-{archetype}-{seed}").into(),
        user_id: format!("u-{archetype}-{seed}").into(),
        user_agent: ua.into(),
        landing_url: "/overview".into(),
        started_at: EPOCH_MS + (seed as i64 % 1_000_000) * 1_000,
    }
}

/// One session of the given archetype: the overview, then four to six
/// articles read with effort that follows the user's rating of them.
pub fn synthesize(archetype: Archetype, seed: u64) -> Synthesis {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ archetype.salt());
    let device = archetype.device();
    let mut b = SessionBuilder::new(session_header(archetype, seed), device);
    let ratings: Vec<u8> = (0..ARTICLE_COUNT).map(|_| rng.random_range(1..=7)).collect();
    let mut order: Vec<usize> = (0..ARTICLE_COUNT).collect();
    order.shuffle(&mut rng);
    let read = &order[..rng.random_range(4..=6)];

    let mut script = Script {
        archetype,
        rng: &mut rng,
        b: &mut b,
    };
    script.overview(read);
    for &k in read {
        script.article(k, ratings[k]);
    }

    for (k, &likert) in ratings.iter().enumerate() {
        if read.contains(&k) || rng.random_bool(0.6) {
            b.rate(content_of(k), Some(likert));
        } else {
            b.rate(content_of(k), None);
        }
    }
    b.finish()
}

struct Script<'a> {
    archetype: Archetype,
    rng: &'a mut ChaCha8Rng,
    b: &'a mut SessionBuilder,
}

impl Script<'_> {
    fn open(&mut self, layout: PageLayout) {
        let after = self.rng.random_range(500..3_000);
        self.b.open_page(layout, after);
    }

    fn wait(&mut self, lo: i64, hi: i64) {
        let ms = self.rng.random_range(lo..hi);
        self.b.wait(ms);
    }

    fn maybe_pause(&mut self) {
        if self.rng.random_bool(0.15) {
            self.wait(61_000, 120_000);
            self.b.tick();
        }
    }

    fn scroll_steps(&mut self, to: i64, dwell: i64) {
        let step = self.b.layout().geometry.step;
        let mut top = self.b.viewport().y;
        while top != to {
            top += if to > top { step } else { -step };
            self.wait(dwell / 2, dwell + 1);
            self.b.scroll_to(top);
        }
    }

    fn overview(&mut self, read: &[usize]) {
        let device = self.b.device();
        self.open(overview_layout(device));
        let max_top = self.b.layout().max_top();
        match self.archetype {
            Archetype::MinimalInteractor | Archetype::ContinuousScroller => {
                self.wait(1_000, 4_000);
                self.scroll_steps(max_top, 800);
                self.maybe_pause();
                self.scroll_steps(0, 400);
            }
            Archetype::PointerReader => {
                for &k in read {
                    let cell = self.teaser(k);
                    self.reveal(cell.y, cell.h);
                    self.hover_and_stroke(&FragmentId::new(format!("overview/t{k}")), cell, 1);
                    let (x, y) = self.interior(cell);
                    self.wait(200, 900);
                    self.b.contact(x, y);
                }
            }
            Archetype::SameYParker => {
                self.b.park(1_200, 350);
                self.wait(2_000, 6_000);
                self.scroll_steps(max_top, 1_500);
                self.maybe_pause();
                self.wait(500, 2_000);
                self.b.park(1_200, self.b.viewport().y + 150);
                self.scroll_steps(0, 700);
                let k = read[0];
                let cell = self.teaser(k);
                self.reveal(cell.y, cell.h);
                let (x, y) = self.interior(cell);
                self.wait(300, 900);
                self.b.contact(x, y);
            }
            Archetype::MobileSwiper => {
                self.wait(800, 2_000);
                self.b.orientation(Orientation::Portrait);
                self.swipe_to(max_top);
                self.wait(500, 2_500);
                self.swipe_to(0);
                for &k in read {
                    let cell = self.teaser(k);
                    self.reveal(cell.y, cell.h);
                    let (x, y) = self.interior(cell);
                    self.wait(400, 1_500);
                    self.b.contact(x, y);
                }
                if self.rng.random_bool(0.5) {
                    let k = read[read.len() - 1];
                    self.wait(300, 900);
                    self.b.pinch_in(&FragmentId::new(format!("overview/t{k}")));
                    self.wait(1_000, 3_000);
                    let top = self.b.layout().max_top().min(self.teaser(k).y);
                    self.b.pinch_out(top);
                }
            }
        }
        self.wait(300, 1_000);
    }

    fn article(&mut self, k: usize, likert: u8) {
        let device = self.b.device();
        self.open(article_layout(device, k));
        let effort = i64::from(likert);
        let paragraphs: Vec<(FragmentId, layout::IRect)> = self
            .b
            .layout()
            .cells
            .iter()
            .filter(|c| c.parent.is_some())
            .map(|c| (c.id.clone(), c.rect))
            .collect();
        let body = self.b.layout().cells[0].id.clone();
        // how far down the article the reader gets
        let depth = (paragraphs.len() * likert as usize).div_ceil(7).max(1);
        let max_top = self.b.layout().max_top();
        let row = self.b.layout().geometry.row;
        match self.archetype {
            Archetype::MinimalInteractor => {
                self.wait(1_000 * effort, 1_500 * effort + 1);
                self.b.tick();
                self.scroll_steps((depth as i64 * row).min(max_top), 600 * effort);
                self.wait(1_000, 2_000 * effort);
            }
            Archetype::ContinuousScroller => {
                for _ in 0..(effort + 1) / 2 {
                    self.scroll_steps(max_top, 250 * effort);
                    self.maybe_pause();
                    self.scroll_steps(0, 150 * effort);
                }
                self.b.tick();
            }
            Archetype::PointerReader => {
                for (id, rect) in paragraphs.iter().take(depth) {
                    self.reveal(rect.y, rect.h);
                    self.hover_and_stroke(id, *rect, 1 + likert as usize / 3);
                    if likert >= 5 {
                        self.wait(200, 800);
                        let len = self.rng.random_range(0..40);
                        self.b.select(id, len);
                        if likert == 7 {
                            self.wait(100, 400);
                            self.b.copy(id, false);
                        }
                    }
                    if self.rng.random_bool(0.4) {
                        let (x, y) = self.interior(*rect);
                        self.wait(200, 800);
                        self.b.contact(x, y);
                    }
                    self.maybe_pause();
                }
                self.wait(1_000, 3_000);
                self.b.enter(&body);
                self.wait(500 * effort, 900 * effort);
                self.b.leave(&body);
            }
            Archetype::SameYParker => {
                let screen_y = 50 + 100 * self.rng.random_range(0..8);
                let top = self.b.viewport().y;
                self.wait(300, 900);
                self.b.park(1_180, top + screen_y);
                self.wait(1_500 * effort, 2_500 * effort);
                self.b.tick();
                self.scroll_steps((depth as i64 * row).min(max_top), 900 * effort);
                self.maybe_pause();
                if likert >= 4 {
                    let (id, rect) = &paragraphs[0];
                    self.scroll_steps(0, 300);
                    self.hover_and_stroke(id, *rect, 1);
                    let screen_y = 50 + 100 * self.rng.random_range(0..8);
                    self.wait(400, 1_200);
                    self.b.park(1_180, self.b.viewport().y + screen_y);
                }
                self.wait(1_000 * effort, 2_000 * effort);
            }
            Archetype::MobileSwiper => {
                self.wait(500 * effort, 1_000 * effort);
                if likert >= 3 {
                    self.b.orientation(Orientation::Landscape);
                    self.wait(500, 1_500);
                }
                self.swipe_to(max_top);
                self.wait(700 * effort, 1_200 * effort);
                for (id, rect) in paragraphs.iter().take(depth) {
                    self.reveal(rect.y, rect.h);
                    let (x, y) = self.interior(*rect);
                    self.wait(300, 900);
                    self.b.contact(x, y);
                    if likert >= 6 {
                        self.wait(300, 900);
                        self.b.select(id, 20);
                        self.b.copy(id, self.rng.random_bool(0.3));
                    }
                }
                if likert >= 4 {
                    let (id, rect) = &paragraphs[depth - 1];
                    self.wait(300, 900);
                    self.b.pinch_in(id);
                    self.wait(800 * effort, 1_200 * effort);
                    self.b.pinch_out(rect.y.min(max_top));
                }
                self.swipe_to(0);
                self.b.orientation(Orientation::Portrait);
                self.wait(300, 1_000);
            }
        }
    }

    fn teaser(&self, k: usize) -> layout::IRect {
        self.b.layout().cells[k].rect
    }

    /// A point well inside the rect.
    fn interior(&mut self, rect: layout::IRect) -> (i64, i64) {
        let mx = rect.w / 5;
        let my = rect.h / 5;
        (
            self.rng.random_range(rect.x + mx..rect.x + rect.w - mx),
            self.rng.random_range(rect.y + my..rect.y + rect.h - my),
        )
    }

    /// Scrolls, or swipes on mobile, so the band [y, y + h) is on screen.
    fn reveal(&mut self, y: i64, h: i64) {
        let view = self.b.viewport();
        if y >= view.y && y + h <= view.y + view.h {
            return;
        }
        let step = self.b.layout().geometry.step;
        let target = ((y / step) * step).min(self.b.layout().max_top()).max(0);
        if self.b.device() == DeviceClass::Mobile {
            self.swipe_to(target);
        } else {
            self.scroll_steps(target, 400);
        }
    }

    fn swipe_to(&mut self, to: i64) {
        let step = self.b.layout().geometry.step;
        let from = self.b.viewport().y;
        if from == to {
            return;
        }
        let dir = if to > from { step } else { -step };
        let tops: Vec<i64> = std::iter::successors(Some(from + dir), |t| Some(t + dir))
            .take(((to - from) / dir) as usize)
            .collect();
        self.wait(100, 400);
        self.b.swipe(&tops);
    }

    /// Hovers a fragment and draws strokes of every kind inside it.
    fn hover_and_stroke(&mut self, id: &FragmentId, rect: layout::IRect, strokes: usize) {
        self.wait(200, 700);
        self.b.enter(id);
        for i in 0..strokes {
            let class = [StrokeClass::Horizontal, StrokeClass::Vertical, StrokeClass::Random][i % 3];
            let points = self.stroke_points(rect, class);
            self.wait(300, 1_200);
            self.b.stroke(&points, class);
        }
        self.wait(500, 2_000);
        self.b.leave(id);
    }

    fn stroke_points(&mut self, rect: layout::IRect, class: StrokeClass) -> Vec<(i64, i64)> {
        let n = self.rng.random_range(3..7i64);
        let margin = 30;
        let x0 = self.rng.random_range(rect.x + margin..rect.x + rect.w / 2);
        let y0 = self.rng.random_range(rect.y + margin..rect.y + rect.h / 2);
        (0..n)
            .map(|i| match class {
                StrokeClass::Horizontal => {
                    let jitter = if i == 0 { 0 } else { self.rng.random_range(-5..=5) };
                    (x0 + i * 90 / (n - 1), y0 + jitter)
                }
                StrokeClass::Vertical => {
                    let jitter = if i == 0 { 0 } else { self.rng.random_range(-5..=5) };
                    (x0 + jitter, y0 + i * 90 / (n - 1))
                }
                StrokeClass::Random => (x0 + i * 60 / (n - 1), y0 + i * 60 / (n - 1)),
            })
            .collect()
    }
}
